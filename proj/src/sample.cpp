#include "predrisk/sample.hpp"

#include <cmath>

namespace predrisk {

void SvHistory::validate() const {
  if (cell < 0 || cell >= ContextGrid::kRows * ContextGrid::kCols)
    throw GridError("sv history cell index out of range");
  if (cell == ContextGrid::kOvCell)
    throw GridError("sv history occupies the OV cell");
  if (static_cast<int>(states.size()) != kHistoryLen)
    throw InvalidValue("sv history must have 16 steps");
  for (const auto& s : states)
    for (double v : s)
      if (!std::isfinite(v)) throw InvalidValue("non-finite value in sv history");
}

void Sample::validate() const {
  if (static_cast<int>(ov_history.size()) != kHistoryLen)
    throw InvalidValue("ov history must have 16 steps");
  // empty future = inference-only sample (no recorded truth)
  if (!ov_future.empty() && static_cast<int>(ov_future.size()) != kFutureLen)
    throw InvalidValue("ov future must have 25 steps when present");
  for (const auto& s : ov_history)
    if (!s.finite()) throw InvalidValue("non-finite value in ov history");
  for (const auto& p : ov_future)
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]))
      throw InvalidValue("non-finite value in ov future");
  int prev_cell = -1;
  for (const auto& sv : sv_histories) {
    sv.validate();
    if (sv.cell <= prev_cell)
      throw GridError("sv histories must be sorted by cell without duplicates");
    prev_cell = sv.cell;
  }
}

}  // namespace predrisk
