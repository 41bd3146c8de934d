"""Monte-Carlo volume growth: the metric dimension exceeds the
topological one.

The Heisenberg group is a 3-manifold, but CC balls scale like r^4.  We
estimate vol(B(r)) at a few radii and fit the log-log slope.  Sample
counts here are kept small so the demo runs in under a minute; the
acceptance-grade run uses 200k samples per radius.
"""

from carnot import catalog
from carnot.measure import dimension_experiment, homogeneous_dimension
from carnot.metric import CCSpace, calibrate_ballbox

space = CCSpace(catalog.heisenberg())
q = homogeneous_dimension(space.algebra)
print("topological dimension:", space.algebra.dim)
print("homogeneous dimension Q:", q)
print()

bb = calibrate_ballbox(space, samples=150, seed=1)
radii = [0.5, 0.7071, 1.0, 1.4142, 2.0]
rows, fit = dimension_experiment(space, bb, radii, 20000, seed=2)

print(f"{'r':>8} {'vol(B(r))':>12} {'stderr':>10}")
for row in rows:
    print(f"{row.radius:>8.4f} {row.volume:>12.5f} {row.stderr:>10.5f}")
print()
print(f"fitted slope: {fit.slope:.3f}  (R^2 = {fit.r_squared:.5f})")
print(f"doubling ratio vol(B(1))/vol(B(0.5)) = "
      f"{rows[2].volume / rows[0].volume:.2f}  (2^Q = {2**q})")
