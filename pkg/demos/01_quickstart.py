"""
Quickstart: four Kaczmarz variants on one coherent system
=========================================================

Entries uniform on [0.9, 1] make every pair of rows nearly parallel, which is
the regime where plain randomized Kaczmarz crawls.
"""
import numpy as np

from inertial_kaczmarz import GenSpec, StopRule, generate, run

p = generate(GenSpec(rows=50, cols=20, c=0.9, seed=42))
print(p.A.shape, "standardized:", p.standardized)

# x_dag is the minimum-norm solution; with x0 = 0 every method converges to it
print("||x_dag|| =", np.linalg.norm(p.x_dag))

stop = StopRule(rse_tol=1e-6, max_iters=2_000_000, reference=p.x_dag)
for kind in ("rk", "tsk", "airk", "mirk"):
    tr = run(kind, p.A, p.b, stop=stop, seed=42)
    print(f"{kind:5s} {tr.status:10s} IT={tr.iterations:8d}  cpu={tr.cpu_seconds:.4f}s  rse={tr.rse[-1]:.2e}")

# tsk and airk are the same iteration written two ways: same seed, same iterates
a = run("tsk", p.A, p.b, stop=stop, seed=7)
b = run("airk", p.A, p.b, stop=stop, seed=7)
print("tsk vs airk, same stream:", a.iterations, b.iterations, np.abs(a.rse - b.rse).max())

# per-step diagnostics: the inertial weight and the distance identities
tr = run("mirk", p.A, p.b, stop=StopRule(max_iters=5, reference=p.x_dag), seed=1, diagnostics=True)
for k, d in enumerate(tr.diagnostics, start=1):
    worst = max(d.identity_residuals.values())
    print(f"k={k} rows={d.rows} mu={d.mu:+.4f} gamma={d.inertial_coeff:+.4f} identity_err={worst:.1e}")

# the trace is plain CSV
print(tr.to_csv().splitlines()[0])
