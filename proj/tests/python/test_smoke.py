import predrisk

def test_import():
    assert predrisk.__version__
