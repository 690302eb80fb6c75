"""Numbered acceptance checks shared by ``rmtquench validate`` and the test suite.

Each ``criterion_k`` returns a :class:`CriterionResult` holding one
:class:`Check` per sub-claim. Sampling checks use the fixed seed
:data:`SEED`; it is never tuned.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import integrate

from . import analytic as an
from . import montecarlo as mc
from .ensemble import haar_pair_moment, haar_pair_moment_table
from .scrambling import echo_from_correlators

SEED = 7
# rounding floor for "within k SE" checks where the SE itself is ~1e-17
ABS_FLOOR = 1e-12


@dataclass
class Check:
    label: str
    passed: bool
    detail: str = ""


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, label, passed, detail=""):
        self.checks.append(Check(label, bool(passed), detail))

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        failed = [f"{c.label} ({c.detail})" for c in self.checks if not c.passed]
        tail = f" :: failed: {'; '.join(failed)}" if failed else ""
        return f"[{status}] criterion {self.number:2d} {self.title}: {len(self.checks)} checks{tail}"


def _within(diff, se, k):
    """Worst ``|diff| / se`` and whether every point satisfies ``|diff| <= k se + ABS_FLOOR``."""
    diff, se = np.abs(np.asarray(diff)), np.asarray(se)
    ok = bool(np.all(diff <= k * se + ABS_FLOOR))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(diff <= ABS_FLOOR, 0.0, diff / se)
    return ok, float(np.max(z))


def _bin_masses(N, beta, edges, sub=16):
    """Analytic probability per bin by composite Simpson on each bin."""
    u = np.linspace(0.0, 1.0, sub + 1)
    width = np.diff(edges)
    W = (edges[:-1, None] + width[:, None] * u[None]).ravel()
    pdf = an.work_pdf(N, beta, np.unique(W)).values
    vals = np.interp(W, np.unique(W), pdf).reshape(width.size, sub + 1)
    return integrate.simpson(vals, x=u, axis=1) * width


def _fourier_pdf(N, beta, W, t_max=40.0, n_t=8001):
    """Work density from numerically inverting the analytic characteristic function."""
    t = np.linspace(0.0, t_max, n_t)
    c = an.chi(N, beta, t)
    integrand = (c[None, :] * np.exp(-1j * W[:, None] * t[None, :])).real
    return integrate.simpson(integrand, x=t, axis=1) / math.pi


def criterion_1(threads=None) -> CriterionResult:
    r = CriterionResult(1, "characteristic function")
    t = np.linspace(0.0, 3.0, 300)
    for N, beta in [(5, 0.0), (5, 1.0), (20, 0.0), (20, 1.0)]:
        ref = an.chi(N, beta, t)
        c = mc.mc_chi(N, beta, t, 50000, SEED, threads=threads)
        ok_re, z_re = _within(c.values.real - ref.real, c.stderr.real, 5)
        ok_im, z_im = _within(c.values.imag - ref.imag, c.stderr.imag, 5)
        r.add(f"mc_chi N={N} beta={beta:g}", ok_re and ok_im, f"max z re={z_re:.2f} im={z_im:.2f}")
        dev = abs(an.chi(N, beta, 0.0) - 1)
        r.add(f"chi(0)=1 N={N} beta={beta:g}", dev <= 1e-12, f"dev={dev:.1e}")
    return r


def criterion_2(threads=None) -> CriterionResult:
    r = CriterionResult(2, "work distribution")
    N = 5
    for beta in (0.0, 1.0):
        h = mc.mc_work_pdf(N, beta, 50000, 80, SEED, mode="annealed", threads=threads)
        ref = _bin_masses(N, beta, h.edges)
        l1 = float(np.abs(h.mass - ref).sum())
        r.add(f"histogram L1 beta={beta:g}", l1 <= 0.03, f"L1={l1:.4f}")
        if beta == 0.0:
            mirror = h.mass[::-1]
            se = np.hypot(h.stderr, h.stderr[::-1])
            ok, z = _within(h.mass - mirror, se, 3)
            r.add("mirror symmetry beta=0", ok, f"max z={z:.2f}")
        W = np.linspace(-15.0, 15.0 + beta, 1201)
        direct = an.work_pdf(N, beta, W).values
        inv = _fourier_pdf(N, beta, W)
        l1f = float(integrate.trapezoid(np.abs(inv - direct), W))
        r.add(f"Fourier inversion beta={beta:g}", l1f <= 1e-3, f"L1={l1f:.2e}")
    return r


def criterion_3(threads=None) -> CriterionResult:
    r = CriterionResult(3, "mean work")
    zero = [an.mean_work(N, 0.0) for N in range(1, 65)]
    r.add("mean_work(N, 0) == 0", all(v == 0.0 for v in zero))
    for N in (2, 5, 20):
        exact, approx = an.mean_work(N, 0.05), an.mean_work_high_t(N, 0.05)
        rel = abs(approx - exact) / abs(exact)
        r.add(f"cubic asymptote N={N}", rel <= 1e-3, f"rel={rel:.1e}")
    betas = np.linspace(0.0, 1.0, 11)
    for N in (2, 5, 20):
        est = mc.mc_mean_work(N, betas, 50000, SEED, mode="annealed", threads=threads)
        ref = np.array([an.mean_work(N, b) for b in betas])
        ok, z = _within(est.value - ref, est.stderr, 3)
        r.add(f"mc annealed N={N} beta<=1", ok, f"max z={z:.2f}")
    est = mc.mc_mean_work(4, 3.0, 50000, SEED, mode="exact", threads=threads)
    gap = (an.mean_work(4, 3.0) - est.value) / est.stderr
    r.add("mc exact below annealed N=4 beta=3", gap > 3, f"z={gap:.1f}")
    return r


def criterion_4(threads=None) -> CriterionResult:
    r = CriterionResult(4, "work variance")
    bad = [N for N in range(1, 65) if an.work_variance(N, 0.0) != N]
    r.add("work_variance(N, 0) == N for N <= 64", not bad, f"mismatch at N={bad[:5]}")
    for N in (5, 9, 20):
        v = an.work_variance(N, 6.0)
        rel = abs(v / (0.5 * (N + 1)) - 1)
        r.add(f"beta=6 plateau N={N}", rel <= 0.01, f"value={v:.4f} rel={rel:.3f}")
    betas = np.array([0.0, 1.0, 3.0])
    for N in (5, 9, 20):
        ref = np.array([an.work_variance(N, b) for b in betas])
        for mode in ("annealed", "exact"):
            est = mc.mc_work_variance(N, betas, 50000, SEED, mode=mode, threads=threads)
            ok, z = _within(est.value - ref, est.stderr, 3)
            r.add(f"mc {mode} N={N}", ok, f"max z={z:.2f}")
    return r


def criterion_5(threads=None) -> CriterionResult:
    r = CriterionResult(5, "spectral form factor")
    worst_c = max(abs(an.connected_ff(N, 0.0, 0.0) / -N - 1) for N in range(1, 33))
    worst_g = max(abs(an.form_factor(N, 0.0, 0.0) / N**2 - 1) for N in range(1, 33))
    r.add("connected_ff(N,0,0) = -N", worst_c <= 1e-9, f"rel={worst_c:.1e}")
    r.add("form_factor(N,0,0) = N^2", worst_g <= 1e-9, f"rel={worst_g:.1e}")
    ref = connected_ff_quadrature(4, 1.0, 2.0)
    val = an.connected_ff(4, 1.0, 2.0)
    rel = abs(val - ref) / abs(ref)
    r.add("connected_ff(4,1,2) vs double quadrature", rel <= 1e-6, f"rel={rel:.1e}")
    return r


def connected_ff_quadrature(N, beta, t, half_width=14.0, nodes=400):
    """Connected form factor as a tensor Gauss-Legendre double integral of the two-level correlator."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    E = half_width * x
    w = half_width * w
    rc = an.two_level_correlator(N, E[:, None], E[None, :])
    s = complex(beta, t)
    fe = w * np.exp(-s * E)
    fe2 = w * np.exp(-s.conjugate() * E)
    return float((fe @ rc @ fe2).real)


def criterion_6(threads=None) -> CriterionResult:
    r = CriterionResult(6, "Loschmidt echo")
    worst = max(abs(an.loschmidt_echo(N, b, 0.0) - 1) for N in (2, 5, 10, 20) for b in (0.0, 0.5, 1.0, 3.0))
    r.add("L(0) = 1", worst <= 1e-12, f"dev={worst:.1e}")
    for beta in (0.0, 1.0):
        slope = -math.log(an.loschmidt_echo(10, beta, 1e-2)) / 1e-4
        var = an.work_variance(10, beta)
        rel = abs(slope / var - 1)
        r.add(f"short-time slope beta={beta:g}", rel <= 0.01, f"slope={slope:.4f} var={var:.4f}")
    t = np.linspace(50.0, 100.0, 2001)
    for beta in (0.0, 1.0):
        avg = integrate.trapezoid(an.loschmidt_echo(5, beta, t), t) / 50.0
        rel = abs(avg / an.echo_plateau(5, beta) - 1)
        r.add(f"late-time plateau beta={beta:g}", rel <= 0.02, f"rel={rel:.4f}")
    tlog = np.geomspace(1e-2, 1e3, 400)
    for beta in (0.0, 1.0):
        c = mc.mc_loschmidt(5, beta, tlog, 5000, SEED, threads=threads)
        ok, z = _within(c.values - an.loschmidt_echo(5, beta, tlog), c.stderr, 5)
        r.add(f"mc echo log-grid beta={beta:g}", ok, f"max z={z:.2f}")
    return r


def criterion_7(threads=None) -> CriterionResult:
    r = CriterionResult(7, "frame potential")
    t = np.geomspace(1e-2, 1e3, 400)
    for N in (3, 6, 12):
        dev = float(np.max(np.abs(an.frame_potential_1(N, 0.0, t) / N**2 - an.loschmidt_echo(N, 0.0, t))))
        r.add(f"F1/N^2 = L N={N}", dev <= 1e-12, f"dev={dev:.1e}")
    tw = np.linspace(100.0, 200.0, 201)
    f = mc.mc_frame_potential(8, tw, 5000, SEED, window=(100.0, 200.0), threads=threads)
    avg = f.meta["window_mean"]
    r.add("mc time average N=8 equals 2 +- 10%", abs(avg / 2 - 1) <= 0.10, f"avg={avg:.4f}")
    return r


def criterion_8(threads=None) -> CriterionResult:
    r = CriterionResult(8, "Haar moments")
    N = 4
    first, second = mc.mc_overlap_moments(N, 100000, SEED, threads=threads)
    ok, z = _within(first.value - 1.0 / N, first.stderr, 3)
    r.add("<p> = 1/N", ok, f"max z={z:.2f}")
    ok, z = _within(second.value - haar_pair_moment_table(N), second.stderr, 3)
    n_bad = int(np.sum(np.abs(second.value - haar_pair_moment_table(N)) > 3 * second.stderr + ABS_FLOOR))
    r.add("<p p'> all tuples", ok, f"max z={z:.2f}, {n_bad}/{N**4} outside")
    exact = True
    for M in (2, 3, 4, 7):
        for n in range(M):
            for m2 in range(M):
                for n2 in range(M):
                    if sum(haar_pair_moment(M, m, n, m2, n2) for m in range(M)) != Fraction(1, M):
                        exact = False
    r.add("sum_m <p p'> = 1/N exactly", exact)
    return r


def criterion_9(threads=None) -> CriterionResult:
    r = CriterionResult(9, "scrambling identity")
    t = np.array([0.0, 0.5, 1.0, 2.0])
    corr = echo_from_correlators(1, t, 10000, SEED)
    echo = mc.mc_loschmidt(2, 0.0, t, 10000, SEED, threads=threads)
    ok, z = _within(corr.value[1:] - echo.values[1:], np.hypot(corr.stderr[1:], echo.stderr[1:]), 3)
    r.add("correlator sum vs mc echo", ok, f"max z={z:.2f}")
    r.add("t=0 value is 1", abs(corr.value[0] - 1) <= 1e-12, f"dev={abs(corr.value[0] - 1):.1e}")
    return r


def criterion_10(threads=None) -> CriterionResult:
    from .cli import main

    r = CriterionResult(10, "engineering")
    runs = [
        ["echo", "--N", "5", "--beta", "1", "--tlog", "1e-2:1e3:100", "--mode", "mc-exact", "--pairs", "600"],
        ["mean-work", "--N", "3,6", "--beta", "0:3:7", "--mode", "mc-annealed", "--pairs", "600"],
    ]
    with tempfile.TemporaryDirectory() as tmp:
        for argv in runs:
            bodies = []
            for k in (1, 4, 8):
                out = Path(tmp) / f"{argv[0]}-{k}"
                code = main(argv + ["--seed", str(SEED), "--threads", str(k), "--out", str(out)])
                if code != 0:
                    bodies.append(None)
                    continue
                bodies.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
            same = bodies[0] is not None and all(b == bodies[0] for b in bodies)
            r.add(f"{argv[0]} CSVs identical for threads 1/4/8", same)
        manifest = next((Path(tmp) / "echo-1").glob("*.json"))
        r.add("manifest replay reproduces checksums", main(["replay", str(manifest), "--out", str(Path(tmp) / "replay")]) == 0)
    return r


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


def run_all(threads=None, only=None, echo=print) -> list[CriterionResult]:
    """Run the selected criteria (all by default), printing one line each."""
    results = []
    for k, fn in enumerate(CRITERIA, start=1):
        if only and k not in only:
            continue
        try:
            res = fn(threads=threads)
        except Exception as exc:  # a crash is a failed criterion, not an aborted suite
            res = CriterionResult(k, fn.__name__)
            res.add("raised", False, f"{type(exc).__name__}: {exc}")
        echo(res.line())
        results.append(res)
    return results
