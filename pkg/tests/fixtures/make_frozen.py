"""Regenerate ``frozen.npz``: seeded inputs and oracle outputs.

Run from the repository root with ``python3 tests/fixtures/make_frozen.py``.
Only numpy and the oracles are used, never the package under test.
"""

from pathlib import Path
import sys

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
import oracles  # noqa: E402

out = {}
rng = np.random.default_rng(20240601)

# init: random 50x10, lam = 1e-2
A = rng.standard_normal((50, 10)); Y = rng.standard_normal((50, 3))
out.update(init_A=A, init_Y=Y, init_W=oracles.ridge_direct(A, Y, 1e-2))

# one chol update, 60x8 plus 60x4, at lam 0.1 and 1e-8
A = rng.standard_normal((60, 8)); H = rng.standard_normal((60, 4)); Y = rng.standard_normal((60, 2))
AH = np.hstack([A, H])
out.update(upd_A=A, upd_H=H, upd_Y=Y,
           upd_F_big=oracles.scalar_inverse_cholesky(oracles.gram(AH, 0.1)),
           upd_F_tiny=oracles.scalar_inverse_cholesky(oracles.gram(AH, 1e-8)),
           upd_W_big=oracles.ridge_direct(AH, Y, 0.1))

# ridge inverse update, 50x6 plus 50x3, lam = 0.01
A = rng.standard_normal((50, 6)); H = rng.standard_normal((50, 3)); Y = rng.standard_normal((50, 2))
out.update(rinv_A=A, rinv_H=H, rinv_Y=Y,
           rinv_Adag=oracles.ridge_inverse_direct(np.hstack([A, H]), 0.01))

# generalized inverse of a full-column-rank [A|H] by SVD, and least squares
A = rng.standard_normal((40, 6)); H = rng.standard_normal((40, 3)); Y = rng.standard_normal((40, 2))
AH = np.hstack([A, H])
out.update(gen_A=A, gen_H=H, gen_Y=Y, gen_pinv=np.linalg.pinv(AH),
           gen_lstsq=np.linalg.lstsq(AH, Y, rcond=None)[0])

np.savez(Path(__file__).with_name("frozen.npz"), **out)
print(sorted(out))
