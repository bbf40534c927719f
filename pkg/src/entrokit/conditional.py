"""Conditional entropy and mutual information estimation.

Conditioning is realized by making the mixture parameters a function of the
conditioning variable: a lookup table with one parameter set per class for
discrete conditioning, or a small feed-forward network (one tanh hidden
layer, three output heads for weight logits / centers / packed Cholesky
factors) for continuous conditioning.  Mutual information is estimated as
the difference between a marginal and a conditional entropy fit trained
jointly on shared batches.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .density import (
    KernelMixtureParams,
    chol_param_size,
    mixture_log_density,
    pack_chol_grad,
    unpack_chol,
)
from .errors import MissingClassError, NumericError, ParameterError
from .training import (
    AdamState,
    TrainConfig,
    adam_step,
    finite_diff_check,
    fit_entropy,
    init_params,
    loss_and_grad,
)

log = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


# --------------------------------------------------------------------------
# mixture with per-sample parameters
# --------------------------------------------------------------------------

def _per_sample_terms(x, logits, shifts, chol, diag_only: bool):
    """Per-component log terms when every sample carries its own mixture.

    Shapes: ``x (N, d)``, ``logits (N, M)``, ``shifts (N, M, d)``,
    ``chol (N, M, K)``.  Returns ``(t, z, e, logu)``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape
    logu = logits - logsumexp(logits, axis=1, keepdims=True)
    z = x[:, None, :] - shifts
    if diag_only:
        ldiag = np.exp(chol)
        e = z * ldiag
        logdet = 2.0 * chol.sum(axis=2)
    else:
        lmat = unpack_chol(chol, d, False)
        e = np.einsum("nmjk,nmj->nmk", lmat, z, optimize=True)
        dp = _diag_slots(d)
        logdet = 2.0 * chol[:, :, dp].sum(axis=2)
    t = logu + 0.5 * logdet - 0.5 * d * LOG_2PI - 0.5 * np.einsum(
        "nmk,nmk->nm", e, e, optimize=True
    )
    return t, z, e, logu


def per_sample_log_density(x, logits, shifts, chol, diag_only: bool):
    """``log p(x_n; theta_n)``; see :func:`_per_sample_terms` for shapes."""
    t, z, e, logu = _per_sample_terms(x, logits, shifts, chol, diag_only)
    return logsumexp(t, axis=1), (t, z, e, logu)


def _diag_slots(d: int) -> np.ndarray:
    k = np.arange(d)
    return k * (k + 3) // 2


def per_sample_loss_grads(x, logits, shifts, chol, diag_only: bool):
    """Mean negative log-density and its per-sample parameter gradients."""
    from .training import _lse_and_negresp

    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape
    t, z, e, logu = _per_sample_terms(x, logits, shifts, chol, diag_only)
    logp, g = _lse_and_negresp(t, n)  # g has shape (N, M)
    loss = float(-logp.mean())

    u = np.exp(logu)
    glogits = g - u * g.sum(axis=1, keepdims=True)
    if diag_only:
        ldiag = np.exp(chol)
        pz = e * ldiag
        gchol = g[:, :, None] * (1.0 - e * e)
    else:
        lmat = unpack_chol(chol, d, False)
        pz = np.einsum("nmkj,nmj->nmk", lmat, e, optimize=True)
        gl = -np.einsum("nm,nmj,nmk->nmjk", g, z, e, optimize=True)
        k = np.arange(d)
        gl[:, :, k, k] += g[:, :, None] / lmat[:, :, k, k]
        gl *= np.tril(np.ones((d, d)))
        gchol = pack_chol_grad(gl, lmat, d, False)
    gshifts = g[:, :, None] * pz
    return loss, glogits, gshifts, gchol


# --------------------------------------------------------------------------
# conditioner network
# --------------------------------------------------------------------------

@dataclass
class ConditionerNet:
    """Feed-forward map from a conditioning vector to mixture parameters.

    One tanh hidden layer shared by three affine heads (weight logits,
    centers, packed Cholesky factors).
    """

    w1: np.ndarray
    b1: np.ndarray
    wu: np.ndarray
    bu: np.ndarray
    wa: np.ndarray
    ba: np.ndarray
    wl: np.ndarray
    bl: np.ndarray
    modes: int
    dim: int
    diag_only: bool = True

    @property
    def cond_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden(self) -> int:
        return self.w1.shape[0]

    @classmethod
    def init(
        cls,
        cond_dim: int,
        modes: int,
        dim: int,
        hidden: int = 128,
        diag_only: bool = True,
        rng: np.random.Generator | None = None,
        init_centers: np.ndarray | None = None,
        head_scale: float = 1e-2,
    ) -> "ConditionerNet":
        """Random trunk, small head weights, head biases set so the initial
        output mixture matches the unconditional initialization."""
        rng = rng or np.random.default_rng(0)
        if hidden < 1:
            raise ParameterError("hidden width must be positive")
        k = chol_param_size(dim, diag_only)
        if init_centers is None:
            init_centers = rng.standard_normal((modes, dim))
        base = init_params("adaptive", init_centers, diag_only)
        scale = head_scale / np.sqrt(hidden)
        return cls(
            w1=rng.standard_normal((hidden, cond_dim)) / np.sqrt(cond_dim),
            b1=np.zeros(hidden),
            wu=rng.standard_normal((modes, hidden)) * scale,
            bu=base.weight_logits.copy(),
            wa=rng.standard_normal((modes * dim, hidden)) * scale,
            ba=base.shifts.reshape(-1).copy(),
            wl=rng.standard_normal((modes * k, hidden)) * scale,
            bl=base.chol.reshape(-1).copy(),
            modes=modes,
            dim=dim,
            diag_only=diag_only,
        )

    def as_dict(self) -> dict:
        return {
            "w1": self.w1, "b1": self.b1,
            "wu": self.wu, "bu": self.bu,
            "wa": self.wa, "ba": self.ba,
            "wl": self.wl, "bl": self.bl,
        }

    def forward(self, y: np.ndarray):
        """Emit per-sample mixture parameters for conditioning rows ``y``."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        n = y.shape[0]
        h = np.tanh(y @ self.w1.T + self.b1)
        k = chol_param_size(self.dim, self.diag_only)
        logits = h @ self.wu.T + self.bu
        shifts = (h @ self.wa.T + self.ba).reshape(n, self.modes, self.dim)
        chol = (h @ self.wl.T + self.bl).reshape(n, self.modes, k)
        return logits, shifts, chol, (y, h)

    def backward(self, cache, glogits, gshifts, gchol) -> dict:
        """Push per-sample parameter gradients back to the network weights."""
        y, h = cache
        n = y.shape[0]
        gsf = gshifts.reshape(n, -1)
        gcf = gchol.reshape(n, -1)
        grads = {
            "wu": glogits.T @ h, "bu": glogits.sum(axis=0),
            "wa": gsf.T @ h, "ba": gsf.sum(axis=0),
            "wl": gcf.T @ h, "bl": gcf.sum(axis=0),
        }
        gh = glogits @ self.wu + gsf @ self.wa + gcf @ self.wl
        gpre = (1.0 - h * h) * gh
        grads["w1"] = gpre.T @ y
        grads["b1"] = gpre.sum(axis=0)
        return grads

    def params_at(self, y) -> KernelMixtureParams:
        """Mixture parameters emitted for a single conditioning value."""
        logits, shifts, chol, _ = self.forward(np.atleast_2d(y))
        return KernelMixtureParams(logits[0], shifts[0], chol[0], self.diag_only)


def conditional_loss_and_grad(net: ConditionerNet, x: np.ndarray, y: np.ndarray):
    """``-(1/N) sum_n log p(x_n | y_n)`` and gradients w.r.t. net weights."""
    logits, shifts, chol, cache = net.forward(y)
    loss, glogits, gshifts, gchol = per_sample_loss_grads(
        x, logits, shifts, chol, net.diag_only
    )
    grads = net.backward(cache, glogits, gshifts, gchol)
    for name, arr in grads.items():
        if not np.all(np.isfinite(arr)):
            raise NumericError("non-finite gradient in network parameter %r" % name)
    return loss, grads


def conditional_log_density(net: ConditionerNet, x, y, chunk: int = 1024) -> np.ndarray:
    """Vectorized ``log p(x_n | y_n)`` under the network, chunked for memory."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x.shape[0] != y.shape[0]:
        raise ParameterError("x and y must pair up")
    out = np.empty(x.shape[0])
    for lo in range(0, x.shape[0], chunk):
        hi = min(x.shape[0], lo + chunk)
        logits, shifts, chol, _ = net.forward(y[lo:hi])
        out[lo:hi], _ = per_sample_log_density(
            x[lo:hi], logits, shifts, chol, net.diag_only
        )
    return out


def gradcheck_conditioner(net: ConditionerNet, x, y, step: float = 1e-5) -> float:
    """Finite-difference check of the full network backward pass."""
    _, analytic = conditional_loss_and_grad(net, x, y)

    def loss_fn(arrays):
        return conditional_loss_and_grad(net, x, y)[0]

    return finite_diff_check(loss_fn, net.as_dict(), analytic, step)


# --------------------------------------------------------------------------
# discrete conditioning
# --------------------------------------------------------------------------

@dataclass
class DiscreteConditionerTable:
    """One fitted mixture per label plus the empirical label counts."""

    params_by_label: dict
    counts: dict

    @property
    def total(self) -> int:
        return int(sum(self.counts.values()))

    def lookup(self, label) -> KernelMixtureParams:
        key = _label_key(label)
        if key not in self.params_by_label:
            raise MissingClassError("no fitted parameters for label %r" % (label,))
        return self.params_by_label[key]

    def label_probs(self) -> dict:
        n = self.total
        return {k: c / n for k, c in self.counts.items()}


def _label_key(label):
    return label.item() if isinstance(label, np.generic) else label


def cond_log_density(x, y, conditioner):
    """``log p(x | y)``: table lookup for discrete y, net forward otherwise."""
    if isinstance(conditioner, DiscreteConditionerTable):
        return mixture_log_density(x, conditioner.lookup(y))
    if isinstance(conditioner, ConditionerNet):
        return mixture_log_density(x, conditioner.params_at(y))
    raise ParameterError("conditioner must be a table or a network")


@dataclass
class DiscreteCondReport:
    """Per-class fits plus the count-weighted conditional entropy."""

    table: DiscreteConditionerTable
    estimate: float
    per_class: dict
    seed: int


def cond_entropy_discrete(x, labels, cfg: TrainConfig | None = None) -> DiscreteCondReport:
    """Fit one mixture per class; return the N_y-weighted entropy average.

    Classes smaller than the configured kernel size get a shrunken support
    set (with a logged warning); empty classes cannot occur since classes
    are read off the data.
    """
    cfg = cfg or TrainConfig()
    x = np.atleast_2d(np.asarray(x, dtype=float))
    labels = np.asarray(labels)
    if labels.shape[0] != x.shape[0]:
        raise ParameterError("labels must align with samples")
    uniq = sorted(np.unique(labels).tolist())
    params_by_label, counts, per_class = {}, {}, {}
    weighted = 0.0
    from dataclasses import replace as _replace

    for rank, label in enumerate(uniq):
        sub = x[labels == label]
        n_y = sub.shape[0]
        m_y = min(cfg.kernel_size, n_y)
        if m_y < cfg.kernel_size:
            log.warning("class %r has %d samples; shrinking kernel size to %d", label, n_y, m_y)
        sub_cfg = _replace(cfg, seed=cfg.seed + rank, kernel_size=m_y)
        report = fit_entropy(sub, mode="adaptive", cfg=sub_cfg)
        params_by_label[_label_key(label)] = report.final_params
        counts[_label_key(label)] = n_y
        per_class[_label_key(label)] = report.final_estimate
        weighted += n_y * report.final_estimate
    table = DiscreteConditionerTable(params_by_label, counts)
    return DiscreteCondReport(table, weighted / x.shape[0], per_class, cfg.seed)


def marginal_from_conditional(z, table: DiscreteConditionerTable, label_probs: dict | None = None) -> float:
    """Plug-in entropy of the label-mixture marginal
    ``-(1/N) sum_n log sum_s p(z_n | s) p(s)``."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    probs = label_probs if label_probs is not None else table.label_probs()
    missing = set(probs) - set(table.params_by_label)
    if missing:
        raise MissingClassError("labels without fitted parameters: %r" % sorted(missing))
    cols = []
    for label, p in sorted(probs.items()):
        if p <= 0:
            continue
        cols.append(np.log(p) + mixture_log_density(z, table.params_by_label[label]))
    logp = logsumexp(np.stack(cols, axis=1), axis=1)
    return float(-logp.mean())


# --------------------------------------------------------------------------
# continuous conditioning and MI
# --------------------------------------------------------------------------

class PairStream:
    """Paired sampler ``fn(rng, n, epoch) -> (x, y)`` drawing fresh batches."""

    def __init__(self, fn):
        self.fn = fn

    def batch(self, rng, n, epoch):
        x, y = self.fn(rng, n, epoch)
        return np.atleast_2d(np.asarray(x, dtype=float)), np.atleast_2d(np.asarray(y, dtype=float))

    def eval_set(self, rng, n, epoch):
        return self.batch(rng, n, epoch)


class FixedPairSource:
    """Fixed paired dataset with a held-out evaluation split."""

    def __init__(self, x, y, eval_pair=None, rng=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if x.shape[0] != y.shape[0]:
            raise ParameterError("paired data must have equal sample counts")
        if eval_pair is None:
            perm = (rng or np.random.default_rng(0)).permutation(x.shape[0])
            half = x.shape[0] // 2
            self.eval_pair = (x[perm[:half]], y[perm[:half]])
            self.x, self.y = x[perm[half:]], y[perm[half:]]
            log.warning("no paired evaluation set supplied; holding out half")
        else:
            self.x, self.y = x, y
            self.eval_pair = (
                np.atleast_2d(np.asarray(eval_pair[0], dtype=float)),
                np.atleast_2d(np.asarray(eval_pair[1], dtype=float)),
            )

    def batch(self, rng, n, epoch):
        idx = rng.integers(0, self.x.shape[0], size=n)
        return self.x[idx], self.y[idx]

    def eval_set(self, rng, n, epoch):
        return self.eval_pair


def _as_pair_source(source, eval_pair, rng):
    if callable(source):
        return PairStream(source)
    x, y = source
    return FixedPairSource(x, y, eval_pair, rng)


@dataclass
class CondFitReport:
    """Training outcome of a continuous-conditioning fit."""

    loss_trace: np.ndarray
    net: ConditionerNet
    epoch_estimates: list
    final_estimate: float
    seed: int


def cond_entropy_continuous(
    source,
    cfg: TrainConfig | None = None,
    hidden: int = 128,
    eval_pair=None,
) -> CondFitReport:
    """Train the conditioner network to minimize the conditional plug-in loss.

    ``source`` is ``(x, y)`` arrays or a callable ``fn(rng, n, epoch)``
    returning paired batches.
    """
    cfg = cfg or TrainConfig()
    ss = np.random.SeedSequence(cfg.seed)
    data_rng, init_rng, eval_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    src = _as_pair_source(source, eval_pair, init_rng)

    x0, y0 = src.batch(init_rng, cfg.kernel_size, 0)
    net = ConditionerNet.init(
        cond_dim=y0.shape[1],
        modes=cfg.kernel_size,
        dim=x0.shape[1],
        hidden=hidden,
        diag_only=cfg.diag_only,
        rng=init_rng,
        init_centers=x0,
    )
    raw = net.as_dict()
    state = AdamState.init_like(raw)
    trace = np.empty(cfg.epochs * cfg.iterations_per_epoch)
    estimates = []
    n_eval = cfg.eval_size or min(cfg.batch_size * cfg.iterations_per_epoch, 20_000)
    k = 0
    for epoch in range(cfg.epochs):
        for _ in range(cfg.iterations_per_epoch):
            bx, by = src.batch(data_rng, cfg.batch_size, epoch)
            loss, grads = conditional_loss_and_grad(net, bx, by)
            adam_step(raw, grads, state, cfg)
            trace[k] = loss
            k += 1
        ex, ey = src.eval_set(eval_rng, n_eval, epoch)
        estimates.append(float(-conditional_log_density(net, ex, ey).mean()))
    return CondFitReport(trace, net, estimates, estimates[-1], cfg.seed)


@dataclass
class MIFitReport:
    """Joint marginal/conditional training outcome; estimates are MI values."""

    loss_trace: np.ndarray
    marginal: KernelMixtureParams
    net: ConditionerNet
    epoch_estimates: list
    final_estimate: float
    seed: int
    marginal_entropy: float = float("nan")
    conditional_entropy: float = float("nan")


def mi_estimate(
    source,
    cfg: TrainConfig | None = None,
    hidden: int = 128,
    eval_pair=None,
) -> MIFitReport:
    """Mutual information as marginal minus conditional plug-in entropy.

    Both parameter sets are updated in the same step from the same batch,
    minimizing the summed cross-entropy loss.  The marginal parameters use
    the configured learning-rate multiplier.
    """
    cfg = cfg or TrainConfig()
    ss = np.random.SeedSequence(cfg.seed)
    data_rng, init_rng, eval_rng = (np.random.default_rng(s) for s in ss.spawn(3))
    src = _as_pair_source(source, eval_pair, init_rng)

    x0, y0 = src.batch(init_rng, cfg.kernel_size, 0)
    marg = init_params("adaptive", x0, cfg.diag_only)
    net = ConditionerNet.init(
        cond_dim=y0.shape[1],
        modes=cfg.kernel_size,
        dim=x0.shape[1],
        hidden=hidden,
        diag_only=cfg.diag_only,
        rng=init_rng,
        init_centers=x0,
    )
    raw = {"marg." + k: v for k, v in marg.as_dict().items()}
    raw.update({"net." + k: v for k, v in net.as_dict().items()})
    lr_scale = {k: cfg.theta_lr_multiplier for k in raw if k.startswith("marg.")}
    state = AdamState.init_like(raw)

    trace = np.empty(cfg.epochs * cfg.iterations_per_epoch)
    estimates = []
    h_marg = h_cond = float("nan")
    n_eval = cfg.eval_size or min(cfg.batch_size * cfg.iterations_per_epoch, 20_000)
    k = 0
    for epoch in range(cfg.epochs):
        for _ in range(cfg.iterations_per_epoch):
            bx, by = src.batch(data_rng, cfg.batch_size, epoch)
            loss_m, grads_m = loss_and_grad(marg, bx)
            loss_c, grads_c = conditional_loss_and_grad(net, bx, by)
            grads = {"marg." + k2: v for k2, v in grads_m.items()}
            grads.update({"net." + k2: v for k2, v in grads_c.items()})
            adam_step(raw, grads, state, cfg, lr_scale=lr_scale)
            trace[k] = loss_m + loss_c
            k += 1
        ex, ey = src.eval_set(eval_rng, n_eval, epoch)
        h_marg = float(-mixture_log_density(ex, marg).mean())
        h_cond = float(-conditional_log_density(net, ex, ey).mean())
        estimates.append(h_marg - h_cond)
    return MIFitReport(
        loss_trace=trace,
        marginal=marg,
        net=net,
        epoch_estimates=estimates,
        final_estimate=estimates[-1],
        seed=cfg.seed,
        marginal_entropy=h_marg,
        conditional_entropy=h_cond,
    )
