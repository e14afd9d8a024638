#!/usr/bin/env python3
"""End-to-end smoke test for the hybridprec_py extension module.

Build the module first, then run this script from anywhere:

    cargo build -p hybridprec-python
    python3 python/smoke_test.py

Matrices cross the boundary as list[list[complex]] (row-major).
"""
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def locate_cdylib() -> Path:
    names = ("libhybridprec_py.so", "libhybridprec_py.dylib", "hybridprec_py.dll")
    found = [
        p
        for profile in ("release", "debug")
        for n in names
        if (p := ROOT / "target" / profile / n).exists()
    ]
    if not found:
        sys.exit("extension not built; run: cargo build -p hybridprec-python")
    return max(found, key=lambda p: p.stat().st_mtime)


def matmul(a, b):
    rows, inner, cols = len(a), len(b), len(b[0])
    assert len(a[0]) == inner
    return [
        [sum(a[i][k] * b[k][j] for k in range(inner)) for j in range(cols)]
        for i in range(rows)
    ]


def frob_sq(m):
    return sum(abs(x) ** 2 for row in m for x in row)


def check(label, ok):
    if not ok:
        sys.exit(f"FAIL {label}")
    print(f"PASS {label}")


def main():
    staging = Path(tempfile.mkdtemp(prefix="hybridprec-py-"))
    shutil.copy2(locate_cdylib(), staging / "hybridprec_py.so")
    sys.path.insert(0, str(staging))
    import hybridprec_py as hp

    n_t, n_r, n_s, n_rf = 16, 4, 2, 2
    ch = hp.Channel(n_t, n_r, seed=3, clusters=3, rays=4)
    h = ch.narrowband()
    check("channel shape", len(h) == n_r and len(h[0]) == n_t)
    hk = ch.subcarrier(0, 8)
    check("subcarrier shape", len(hk) == n_r and len(hk[0]) == n_t)

    f_opt = hp.optimal_precoder(h, n_s)
    w_opt = hp.optimal_combiner(h, n_s)
    r_digital = hp.spectral_efficiency(h, f_opt, w_opt, 0.0)
    check(f"digital rate {r_digital:.3f} bits/s/Hz", r_digital > 0.0)

    analog, digitals, trace = hp.mo_altmin([f_opt], n_rf, seed=1)
    check(
        "mo-altmin analog is unit modulus",
        all(abs(abs(x) - 1.0) < 1e-12 for row in analog for x in row),
    )
    check(
        "mo-altmin trace is monotone",
        all(b <= a + 1e-12 for a, b in zip(trace, trace[1:])),
    )
    f_mo = matmul(analog, digitals[0])
    check("mo-altmin transmit power", abs(frob_sq(f_mo) - n_s) < 1e-9)
    r_mo = hp.spectral_efficiency(h, f_mo, w_opt, 0.0)
    check(f"mo-altmin rate {r_mo:.3f} <= digital", r_mo <= r_digital + 1e-9)

    pe_analog, pe_digitals, _ = hp.pe_altmin([f_opt], n_rf, seed=1)
    r_pe = hp.spectral_efficiency(h, matmul(pe_analog, pe_digitals[0]), w_opt, 0.0)
    check(f"pe-altmin rate {r_pe:.3f} <= digital", r_pe <= r_digital + 1e-9)

    sdr_analog, sdr_digitals, sdr_trace = hp.sdr_altmin([f_opt], n_rf, seed=1)
    check(
        "sdr-altmin analog is block sparse",
        all(sum(x != 0 for x in row) == 1 for row in sdr_analog),
    )
    check(
        "sdr-altmin trace is monotone",
        all(b <= a + 1e-9 for a, b in zip(sdr_trace, sdr_trace[1:])),
    )
    f_sdr = matmul(sdr_analog, sdr_digitals[0])
    check("sdr-altmin transmit power", abs(frob_sq(f_sdr) - n_s) < 1e-9)

    omp_analog, omp_digitals = hp.omp_hybrid([f_opt], ch, n_rf)
    f_omp = matmul(omp_analog, omp_digitals[0])
    check("omp transmit power", abs(frob_sq(f_omp) - n_s) < 1e-9)
    w_omp_analog, w_omp_digitals = hp.omp_combiner([w_opt], ch, n_rf)
    check("omp combiner shape", len(w_omp_analog) == n_r)

    ab_analog, ab_digitals = hp.analog_beamforming(ch, n_s)
    check(
        "analog beamforming power",
        abs(frob_sq(matmul(ab_analog, ab_digitals[0])) - n_s) < 1e-12,
    )
    check(
        "analog beamforming steers one subarray per stream",
        all(
            sum(abs(abs(z) - 1.0) < 1e-12 for z in row) == 1
            and sum(z != 0 for z in row) == 1
            for row in ab_analog
        ),
    )
    ac_analog, _ = hp.analog_combining(ch, n_s)
    check("analog combining shape", len(ac_analog) == n_r and len(ac_analog[0]) == n_s)

    ee = hp.energy_efficiency(r_mo, "fully", n_t, n_rf)
    power = 10.0 + n_rf * 0.1 + n_t * 0.1 + n_t * n_rf * 0.01
    check("energy efficiency", abs(ee - r_mo / power) < 1e-12)

    csv = hp.run_config(
        "n_t = 16\nn_r = 4\nn_s = 2\nn_rf_t = 2\nn_rf_r = 2\n"
        "algorithms = digital, pe-altmin\nsnr_db = 0\nrealizations = 2\n"
        "clusters = 3\nrays = 4\nseed = 5\n"
    )
    header = csv.splitlines()[0]
    check(
        "run_config CSV header",
        header
        == "algorithm,structure,snr_db,n_rf,subcarriers,mean_rate,std_rate,"
        "mean_energy_eff,realizations,wall_time_s",
    )
    check("run_config row count", len(csv.splitlines()) == 3)

    try:
        hp.optimal_precoder(h, 99)
    except ValueError:
        print("PASS invalid stream count raises ValueError")
    else:
        sys.exit("FAIL invalid stream count accepted")

    print("OK: all smoke checks passed")


if __name__ == "__main__":
    main()
