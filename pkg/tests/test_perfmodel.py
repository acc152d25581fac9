from fractions import Fraction

import pytest

from skinny_qr.perfmodel import (
    KERNELS,
    HardwareSpec,
    composite_bytes,
    composite_time,
    format_hardware,
    hardware_names,
    intensity,
    intensity_exact,
    load_hardware,
    machine_balance,
    parse_hardware,
    predict_time,
    roofline_rate,
)


@pytest.fixture
def h100():
    return load_hardware("h100")


def _hw(bw, peak):
    return HardwareSpec("test", bw, peak, 1, 1, 1)


def test_intensity_values():
    assert intensity("tsmttsm", 8) == 2.0
    assert intensity("tsmRttsmR", 16) == 6.0
    assert intensity("tsmmttsmm", 32) == 16.0
    assert intensity_exact("tsqr", 3) == Fraction(3, 4)
    assert intensity_exact("hhqr_readwrite", 8) == 1


def test_intensity_independent_of_m():
    for k in KERNELS.values():
        for n in (1, 7, 64):
            ref = Fraction(k.flops(1, n), k.bytes(1, n))
            for m in (10, 12345, 10**9):
                assert Fraction(k.flops(m, n), k.bytes(m, n)) == ref


def test_machine_balance(h100):
    assert machine_balance(_hw(3.4e12, 34e12)) == 10.0
    assert machine_balance(_hw(5.0, 5.0)) == 1.0
    assert machine_balance(h100) == pytest.approx(34e12 / 2.15e12)
    assert machine_balance(h100) == pytest.approx(15.8, abs=0.05)


def test_roofline(h100):
    assert roofline_rate(h100, 0.0) == 0.0
    assert roofline_rate(h100, 2.0) == pytest.approx(4.3e12)
    assert roofline_rate(h100, 1e6) == 34e12
    with pytest.raises(ValueError):
        roofline_rate(h100, -1.0)


@pytest.mark.parametrize("mn, ms", [(8.192e6 * 8, 0.48), (8.192e7 * 8, 4.8), (8.192e8 * 8, 48.0)])
def test_householder_rows(h100, mn, ms):
    for n in (8, 16, 32, 64):
        t = predict_time(h100, "hhqr_readwrite", int(mn) // n, n)
        assert t * 1e3 == pytest.approx(ms, rel=0.02)


def test_tsqr_prediction(h100):
    t = predict_time(h100, "tsqr", 8_192_000, 8)
    assert t == 8 * 8_192_000 * 8 / 2.15e12
    assert t * 1e3 == pytest.approx(0.24, rel=0.02)


def test_memory_bound_is_bytes_over_bw(h100):
    M = machine_balance(h100)
    for name, k in KERNELS.items():
        for n in range(1, 129):
            if intensity(name, n) < M:
                assert predict_time(h100, name, 1000, n) == k.bytes(1000, n) / h100.mem_bandwidth


def test_monotone(h100):
    for name in KERNELS:
        times = [predict_time(h100, name, m, 16) for m in (1, 10, 1000, 10**6)]
        assert times == sorted(times)
        ints = [intensity(name, n) for n in range(1, 129)]
        assert ints == sorted(ints)


def test_composites(h100):
    for n in range(1, 32):
        assert composite_time(h100, "svqb2", 10**6, n) / composite_time(h100, "tsqr", 10**6, n) == 2.0
    assert composite_bytes("svqb2", 100, 4) == 2 * 100 * 4 * 8
    assert composite_bytes("svqb2_naive", 100, 4) == 4 * 100 * 4 * 8
    # 3n/8 > M switches cholqr2 to compute bound
    M = machine_balance(h100)
    n = next(n for n in range(1, 200) if 3 * n / 8 > M)
    m = 10**6
    t2 = predict_time(h100, "tsmRttsmR", m, n)
    assert t2 == KERNELS["tsmRttsmR"].flops(m, n) / h100.peak_fp64
    with pytest.raises(ValueError):
        composite_time(h100, "lu", 10, 2)


def test_hardware_database():
    assert hardware_names() == ["b100", "h100", "mi300x", "mi350x"]
    h = load_hardware("H100")
    assert (h.mem_bandwidth, h.mem_bandwidth_theoretical, h.peak_fp64) == (2.15e12, 3.4e12, 34e12)
    assert h.sm_count == 132 and h.shared_mem_per_unit == 228 * 1024
    mi = load_hardware("mi300x")
    assert mi.sm_count == 304 and mi.peak_fp64 == 82e12 and mi.hbm_capacity == 192 * 10**9


def test_hardware_file_round_trip(tmp_path):
    h = load_hardware("b100")
    p = tmp_path / "mine.hw"
    p.write_text("# custom\n" + format_hardware(h))
    assert load_hardware(p) == h


def test_hardware_parse_errors():
    with pytest.raises(ValueError, match="missing"):
        parse_hardware("name = x\nmem_bandwidth = 1\n")
    with pytest.raises(ValueError, match="unknown key"):
        parse_hardware("colour = blue\n")
    with pytest.raises(ValueError, match="positive"):
        parse_hardware(
            "name=x\nmem_bandwidth=0\npeak_fp64=1\nsm_count=1\nshared_mem_per_unit=1\nhbm_capacity=1\n"
        )
    with pytest.raises(ValueError, match="unknown hardware"):
        load_hardware("a100")
