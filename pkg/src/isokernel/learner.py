"""Online learners: dual-form OGD, primal IK-OGD, and NOGD.

All three use the hinge loss: a point with label c and score f violates the
margin when c*f < 1, and only then is the model updated with step size eta
(the update coefficient applied per support vector is eta * c). Scores tie
at zero predict +1.

Models track operation counters so prediction cost can be asserted without
wall clocks: the dual model counts kernel evaluations (grows with the
support set), the primal models count weight reads (constant per
prediction).
"""

import json

import numpy as np

from .dataset import SparseVector
from .errors import ParameterError, ProvenanceError, ShapeError
from .featuremap import Mapper, OpCounter, accumulate, efficient_dot, new_weights
from .kernels import make_kernel
from .nystrom import NystromMap

FORMAT_VERSION = 1


def predict_label(score):
    """Class decision from a real score; ties at zero go to +1."""
    return 1 if score >= 0 else -1


def margin_violated(score, c):
    """Hinge-loss subgradient is nonzero iff c*score < 1 (strict)."""
    return c * score < 1.0


class FeatureMatchKernel:
    """Kernel over indexed features: fraction of agreeing positions.

    Lets a dual model run on mapped features, mirroring the primal model's
    kernel exactly.
    """

    name = "feature-match"

    def __init__(self, t):
        self.t = t

    def __call__(self, fa, fb):
        if fa.size != self.t or fb.size != self.t:
            raise ProvenanceError("feature length does not match kernel t")
        return float(np.count_nonzero(fa == fb)) / self.t

    def point_to_row(self, f):
        return np.asarray(f, dtype=np.int32)

    def row_scores(self, row, F):
        return np.count_nonzero(F == row, axis=1) / self.t

    def matrix(self, A, B):
        out = np.empty((A.shape[0], B.shape[0]))
        for i in range(A.shape[0]):
            out[i] = np.count_nonzero(B == A[i], axis=1)
        return out / self.t


class DualModel:
    """Support-vector model with f(x) = sum_i alpha_i c_i k(x_i, x).

    The support set grows without budget; prediction cost is one kernel
    evaluation per stored vector. Rows of the stored vectors are kept in a
    dense buffer so the kernel's vectorized scoring path can be used.
    """

    def __init__(self, kernel_fn):
        self.kernel = kernel_fn
        self.svs = []  # (point, c, alpha) in arrival order
        self._rows = None
        self._coeffs = np.empty(0)  # alpha_i * c_i, precombined
        self._l1 = np.empty(0)  # ||row||_1, kept for sparse scoring paths
        self._use_sparse = hasattr(kernel_fn, "sparse_row_scores")
        self.updates = 0
        self.predictions = 0
        self.last_predict_ops = 0
        self.total_ops = 0

    def __len__(self):
        return len(self.svs)

    def _append(self, point, c, alpha):
        row = self.kernel.point_to_row(point)
        n = len(self.svs)
        if self._rows is None:
            cap = 256
            self._rows = np.zeros((cap,) + row.shape, dtype=row.dtype)
            self._coeffs = np.zeros(cap)
            self._l1 = np.zeros(cap)
        elif n == self._rows.shape[0]:
            self._rows = np.concatenate([self._rows, np.zeros_like(self._rows)])
            self._coeffs = np.concatenate([self._coeffs, np.zeros_like(self._coeffs)])
            self._l1 = np.concatenate([self._l1, np.zeros_like(self._l1)])
        self._rows[n] = row
        self._coeffs[n] = alpha * c
        if self._use_sparse:
            self._l1[n] = np.abs(row).sum()
        self.svs.append((point, c, alpha))
        self.updates += 1

    def predict(self, x):
        """Score of one point; costs len(self) kernel evaluations."""
        s = len(self.svs)
        self.predictions += 1
        self.last_predict_ops = s
        self.total_ops += s
        if s == 0:
            return 0.0
        if self._use_sparse and isinstance(x, SparseVector):
            scores = self.kernel.sparse_row_scores(
                x, self._rows[:s], self._l1[:s]
            )
        else:
            scores = self.kernel.row_scores(
                self.kernel.point_to_row(x), self._rows[:s]
            )
        return float(self._coeffs[:s] @ scores)

    def predict_many(self, points):
        """Scores for many points against the frozen support set."""
        s = len(self.svs)
        self.predictions += len(points)
        self.last_predict_ops = s
        self.total_ops += s * len(points)
        if s == 0:
            return np.zeros(len(points))
        if self._use_sparse and all(
            isinstance(p, SparseVector) for p in points
        ):
            coeffs = self._coeffs[:s]
            return np.array([
                float(coeffs @ self.kernel.sparse_row_scores(
                    p, self._rows[:s], self._l1[:s]
                ))
                for p in points
            ])
        rows = np.stack([self.kernel.point_to_row(p) for p in points])
        K = self.kernel.matrix(rows, self._rows[:s])
        return K @ self._coeffs[:s]

    def step(self, x, c, eta):
        """Predict, then add x as a support vector on margin violation."""
        score = self.predict(x)
        if margin_violated(score, c):
            self._append(x, c, eta)
        return score


class IKOGDModel:
    """Primal model over indexed features: f = <w, Phi> / t.

    The weight update on violation adds eta*c at the t cells the feature
    indexes, which is exactly the dual update expressed through the feature
    map; prediction reads t weights regardless of psi or update count.
    """

    def __init__(self, t, psi, mapper=None, record_updates=False):
        self.t = t
        self.psi = psi
        self.mapper = mapper
        self.w = new_weights(t, psi)
        self.updates = 0
        self.predictions = 0
        self.last_predict_ops = 0
        self.total_ops = 0
        self.update_log = [] if record_updates else None

    def _check(self, f):
        if f.size != self.t:
            raise ProvenanceError(
                f"feature length {f.size} does not match model t={self.t}"
            )

    def predict(self, f):
        self._check(f)
        counter = OpCounter()
        score = efficient_dot(self.w, f, counter) / self.t
        self.predictions += 1
        self.last_predict_ops = counter.count
        self.total_ops += counter.count
        return score

    def predict_many(self, F):
        """Scores for an (n, t) feature matrix against frozen weights."""
        F = np.asarray(F)
        if F.shape[1] != self.t:
            raise ProvenanceError(
                f"feature length {F.shape[1]} does not match model t={self.t}"
            )
        self.predictions += F.shape[0]
        self.last_predict_ops = self.t
        self.total_ops += self.t * F.shape[0]
        return self.w[np.arange(self.t), F].sum(axis=1) / self.t

    def step(self, f, c, eta):
        score = self.predict(f)
        if margin_violated(score, c):
            accumulate(self.w, f, eta * c)
            self.updates += 1
            if self.update_log is not None:
                self.update_log.append((f.copy(), eta * c))
        return score


class NOGDModel:
    """Linear model over dense approximate features: f = <w, xhat>."""

    def __init__(self, r, nystrom=None):
        self.r = r
        self.nystrom = nystrom
        self.w = np.zeros(r)
        self.updates = 0
        self.predictions = 0
        self.last_predict_ops = 0
        self.total_ops = 0

    def _check(self, xhat):
        if xhat.shape != (self.r,):
            raise ShapeError(
                f"feature shape {xhat.shape} does not match model r={self.r}"
            )

    def predict(self, xhat):
        self._check(xhat)
        self.predictions += 1
        self.last_predict_ops = self.r
        self.total_ops += self.r
        return float(self.w @ xhat)

    def predict_many(self, Xhat):
        Xhat = np.asarray(Xhat)
        if Xhat.shape[1] != self.r:
            raise ShapeError(
                f"feature width {Xhat.shape[1]} does not match model r={self.r}"
            )
        self.predictions += Xhat.shape[0]
        self.last_predict_ops = self.r
        self.total_ops += self.r * Xhat.shape[0]
        return Xhat @ self.w

    def step(self, xhat, c, eta):
        score = self.predict(xhat)
        if margin_violated(score, c):
            self.w += (eta * c) * xhat
            self.updates += 1
        return score


# ---------------------------------------------------------------------------
# checkpointing


def save_checkpoint(path, kind, model, hyper):
    """Write a self-contained model checkpoint (npz).

    ``kind`` is one of ogd | ik-ogd-iforest | ik-ogd-anne | nogd. The fitted
    transformer (mapper or landmark map) travels inside the checkpoint.
    """
    meta = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "hyper": hyper,
        "updates": model.updates,
    }
    payload = {}
    if kind.startswith("ik-ogd"):
        payload["w"] = model.w
        for i, part in enumerate(model.mapper.parts):
            for key, arr in part.state().items():
                payload[f"mapper_part{i}_{key}"] = arr
        meta["mapper"] = {
            "scheme": model.mapper.scheme,
            "t": model.mapper.t,
            "psi": model.mapper.psi,
            "seed": model.mapper.seed,
            "dim": model.mapper.dim,
        }
    elif kind == "nogd":
        payload["w"] = model.w
        nm = model.nystrom
        offsets = np.zeros(len(nm.landmarks) + 1, dtype=np.int64)
        for i, z in enumerate(nm.landmarks):
            offsets[i + 1] = offsets[i] + len(z)
        payload["proj"] = nm.proj
        payload["lm_indices"] = np.concatenate(
            [z.indices for z in nm.landmarks] or [np.empty(0, dtype=np.int32)]
        )
        payload["lm_values"] = np.concatenate(
            [z.values for z in nm.landmarks] or [np.empty(0)]
        )
        payload["lm_offsets"] = offsets
        meta["nystrom"] = {
            "kernel": nm.kernel.params(),
            "b": nm.b,
            "r": nm.r,
            "seed": nm.seed,
            "dim": max(z.dim for z in nm.landmarks),
        }
    elif kind == "ogd":
        s = len(model.svs)
        offsets = np.zeros(s + 1, dtype=np.int64)
        for i, (p, _, _) in enumerate(model.svs):
            offsets[i + 1] = offsets[i] + len(p)
        payload["sv_indices"] = np.concatenate(
            [p.indices for p, _, _ in model.svs]
            or [np.empty(0, dtype=np.int32)]
        )
        payload["sv_values"] = np.concatenate(
            [p.values for p, _, _ in model.svs] or [np.empty(0)]
        )
        payload["sv_offsets"] = offsets
        payload["cs"] = np.array([c for _, c, _ in model.svs])
        payload["alphas"] = np.array([a for _, _, a in model.svs])
        meta["kernel"] = model.kernel.params()
        meta["dim"] = model.kernel.dim
    else:
        raise ParameterError(f"unknown learner kind {kind!r}")
    np.savez_compressed(path, meta=json.dumps(meta), **payload)


def load_checkpoint(path):
    """Rebuild (kind, model, hyper) from a checkpoint written above."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta["format_version"] != FORMAT_VERSION:
            raise ParameterError(
                f"unsupported checkpoint format {meta['format_version']}"
            )
        kind = meta["kind"]
        if kind.startswith("ik-ogd"):
            mm = meta["mapper"]
            from .partition import SCHEMES

            parts = []
            for i in range(mm["t"]):
                prefix = f"mapper_part{i}_"
                state = {
                    key[len(prefix) :]: data[key]
                    for key in data.files
                    if key.startswith(prefix)
                }
                parts.append(SCHEMES[mm["scheme"]].from_state(state))
            mapper = Mapper(
                parts, mm["psi"], mm["t"], mm["scheme"], mm["seed"], mm["dim"]
            )
            model = IKOGDModel(mm["t"], mm["psi"], mapper=mapper)
            model.w = data["w"].copy()
        elif kind == "nogd":
            nm = meta["nystrom"]
            offsets = data["lm_offsets"]
            landmarks = [
                SparseVector(
                    data["lm_indices"][offsets[i] : offsets[i + 1]],
                    data["lm_values"][offsets[i] : offsets[i + 1]],
                    nm["dim"],
                )
                for i in range(len(offsets) - 1)
            ]
            nmap = NystromMap(
                landmarks, make_kernel(nm["kernel"]), data["proj"],
                nm["b"], nm["r"], nm["seed"],
            )
            model = NOGDModel(nmap.effective_r, nystrom=nmap)
            model.w = data["w"].copy()
        elif kind == "ogd":
            model = DualModel(make_kernel(meta["kernel"]))
            offsets = data["sv_offsets"]
            for i in range(len(offsets) - 1):
                point = SparseVector(
                    data["sv_indices"][offsets[i] : offsets[i + 1]],
                    data["sv_values"][offsets[i] : offsets[i + 1]],
                    meta["dim"],
                )
                model._append(
                    point, int(data["cs"][i]), float(data["alphas"][i])
                )
        else:
            raise ParameterError(f"unknown learner kind {kind!r}")
        model.updates = meta["updates"]
    return kind, model, meta["hyper"]
