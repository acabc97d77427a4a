# %% [markdown]
# # Distances and geodesics between pairs of subspaces
#
# Points are pairs (X, Y) with X^T X = m I and Y^T Y = n I, defined up to
# rotation of their columns.

# %%
import numpy as np

from optspace.manifold import FactorPoint, distance, geodesic_to, move, principal_angles

p = FactorPoint.random(50, 40, 3, seed=0)
q = FactorPoint.random(50, 40, 3, seed=1)
print("principal angles (X):", np.round(principal_angles(p.X, q.X), 4))
print("distance:", distance(p, q))

# %%
# rotating the columns leaves the point unchanged
A, _ = np.linalg.qr(np.random.default_rng(2).standard_normal((3, 3)))
print("distance to a rotated copy:", distance(p, p.rotated(A, A.T)))

# %%
# walk along the geodesic from p to q
v = geodesic_to(p, q)
for t in (0.0, 0.25, 0.5, 0.75, 1.0):
    print(f"t={t:.2f}  d(p, .)={distance(p, move(p, v, t)):.4f}  d(., q)={distance(move(p, v, t), q):.4f}")
