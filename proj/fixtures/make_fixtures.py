#!/usr/bin/env python3
"""Regenerates the synthetic fixture files in this directory.

Trajectories are closed-form (sinusoidal speed modulation integrated
exactly), so position, velocity, and acceleration columns are mutually
consistent and the files are reproducible byte for byte.
"""

import math
import os

HERE = os.path.dirname(os.path.abspath(__file__))
FT = 0.3048  # meters per foot


def write(name, text):
    with open(os.path.join(HERE, name), "w") as f:
        f.write(text)
    print(name)


# ---------------------------------------------------------------- ngsim
# 10 Hz, feet. Lateral wobble around the lane center; vehicle 105 has a
# frame gap so the parser must split it into two tracks.

def ngsim_mini():
    lanes_m = {1: 2.0, 2: 6.0, 3: 10.0}
    # id -> (lane, x0 m, v0 m/s, speed amp, speed freq, wobble amp, phase)
    vehicles = [
        (101, 1, 0.0, 24.0, 1.2, 0.11, 0.15, 0.0),
        (102, 1, 30.0, 23.5, 0.8, 0.17, 0.12, 1.1),
        (103, 2, 12.0, 26.0, 1.0, 0.13, 0.18, 2.3),
        (104, 2, -20.0, 25.0, 1.5, 0.09, 0.10, 3.7),
        (105, 3, 5.0, 22.0, 0.7, 0.19, 0.14, 0.6),
    ]
    rows = []
    for vid, lane, x0, v0, amp, om, wob, ph in vehicles:
        for frame in range(1, 401):
            if vid == 105 and 180 <= frame < 195:
                continue  # gap: splits into two tracks
            t = frame / 10.0
            x = x0 + v0 * t - (amp / om) * (math.cos(om * t) - 1.0)
            v = v0 + amp * math.sin(om * t)
            a = amp * om * math.cos(om * t)
            y = lanes_m[lane] + wob * math.sin(0.5 * t + ph)
            rows.append(
                "%d,%d,%.4f,%.4f,%.3f,%.3f,%.4f,%.4f,%d"
                % (vid, frame, y / FT, x / FT, 5.0 / FT, 2.0 / FT,
                   v / FT, a / FT, lane)
            )
    header = "Vehicle_ID,Frame_ID,Local_X,Local_Y,v_Length,v_Width,v_Vel,v_Acc,Lane_ID"
    write("ngsim_mini.csv", header + "\n" + "\n".join(rows) + "\n")


# ---------------------------------------------------------------- highd
# 25 Hz, meters, top-left box corners. One upper-lane vehicle drives in the
# negative-x direction to exercise per-track normalization.

def highd_mini():
    meta = (
        "id,frameRate,locationId,upperLaneMarkings,lowerLaneMarkings\n"
        "1,25,2,0.00;4.00;8.00,12.00;16.00;20.00\n"
    )
    write("highd_mini_meta.csv", meta)

    # lane centers: upper 2, 6 (x decreasing); lower 14, 18 (x increasing)
    # id -> (lane center, direction, x0, v0, amp, om, wobble, phase)
    vehicles = [
        (1, 14.0, 1, 10.0, 28.0, 1.0, 0.12, 0.12, 0.4),
        (2, 14.0, 1, 45.0, 27.0, 1.4, 0.10, 0.10, 1.9),
        (3, 18.0, 1, 0.0, 30.0, 0.8, 0.15, 0.15, 2.8),
        (4, 6.0, -1, 400.0, 29.0, 1.1, 0.11, 0.13, 0.9),
    ]
    length, width = 4.8, 1.9
    rows = []
    for vid, cy, sgn, x0, v0, amp, om, wob, ph in vehicles:
        for frame in range(0, 1000):
            t = frame / 25.0
            x = x0 + sgn * (v0 * t - (amp / om) * (math.cos(om * t) - 1.0))
            v = sgn * (v0 + amp * math.sin(om * t))
            a = sgn * (amp * om * math.cos(om * t))
            y = cy + wob * math.sin(0.5 * t + ph)
            rows.append(
                "%d,%d,%.5f,%.5f,%.2f,%.2f,%.5f,%.5f,%.5f,%.5f"
                % (frame, vid, x - length / 2.0, y - width / 2.0, length, width,
                   v, 0.0, a, 0.0)
            )
    header = ("frame,id,x,y,width,height,xVelocity,yVelocity,"
              "xAcceleration,yAcceleration")
    write("highd_mini_tracks.csv", header + "\n" + "\n".join(rows) + "\n")


# ------------------------------------------------------------- scenarios
# 0.2 s step, road frame, lane centers 2 / 6 / 14.4 / 18.4.

SCENARIO_HEADER = (
    "# lane_centers = 2, 6, 14.4, 18.4\n"
    "# lane_width = 4\n"
    "# av = ego\n"
    "vehicle_id,t,x,y,vx,vy,ax,ay,length,width\n"
)


def srow(vid, t, x, y, vx, vy=0.0, ax=0.0, ay=0.0):
    return "%s,%.1f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,5.21,2.04" % (
        vid, t, x, y, vx, vy, ax, ay)


def car_following():
    # AV at 25 m/s in lane y=2; lead 55 m ahead at the same speed; a faster
    # vehicle in the left lane. AV history ends at t0 = 3.0; the others run
    # to 8.0 s so recorded truth exists for overlay output.
    rows = []
    for i in range(16):  # ego: t = 0.0 .. 3.0
        t = i * 0.2
        rows.append(srow("ego", t, 25.0 * t, 2.0, 25.0))
    for i in range(41):  # lead: t = 0.0 .. 8.0
        t = i * 0.2
        rows.append(srow("lead", t, 55.0 + 25.0 * t, 2.0, 25.0))
    for i in range(41):  # left-lane pass: t = 0.0 .. 8.0
        t = i * 0.2
        rows.append(srow("left", t, 30.0 + 30.0 * t, 6.0, 30.0))
    write("car_following.csv", SCENARIO_HEADER + "\n".join(rows) + "\n")


def cut_in():
    # A vehicle drifts from the left lane toward the AV's lane while
    # closing slowly. Lateral motion: constant vy = -1 from y=6.
    rows = []
    for i in range(16):
        t = i * 0.2
        rows.append(srow("ego", t, 20.0 * t, 2.0, 20.0))
    for i in range(41):
        t = i * 0.2
        rows.append(srow("cutter", t, 18.0 + 19.0 * t, 6.0 - 1.0 * t, 19.0, -1.0))
    write("cut_in.csv", SCENARIO_HEADER + "\n".join(rows) + "\n")


if __name__ == "__main__":
    ngsim_mini()
    highd_mini()
    car_following()
    cut_in()
