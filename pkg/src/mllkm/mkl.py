"""Budgeted active-set training of the l1 kernel combination.

The outer loop alternates four steps: refresh the inner SVM solution on the
current weighted Gram, scan the open candidate kernels for violators of the
insertion criterion (scores computed over support vectors only, no Gram
materialization), run reduced-gradient descent on the simplex weights, and
prune kernels whose weight collapsed to zero. Cached Gram blocks never exceed
the configured budget.
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from .kernels import gram, locality_weight, locality_weight_sq
from .sdca import SdcaConfig, _gram_values, objective_from_state, sdca

ARMIJO_C1 = 1e-4
MAX_HALVINGS = 8
PLATEAU_RTOL = 1e-7  # objective changes below this (relative) count as no progress


@dataclass
class MklConfig:
    C: float = 100.0
    epochs: int = 10          # inner solver epoch budget per call
    seed: int = 0
    batch_size: int = 8       # candidates admitted per probe round
    cache_budget: int = 64    # max simultaneously cached Gram blocks
    prune_tol: float = 1e-8   # weights at or below this leave the active set
    violation_tol: float = 1e-3  # relative slack for insertion and the certificate
    max_outer: int = 50
    max_weight_iters: int = 12
    stall_tol: float = 1e-4   # inner solver early-stop (KKT) tolerance
    inner_rounds: int = 3     # max sdca calls per objective evaluation
    reprocess: bool = False   # pruned kernels return to the open set
    line_search_resolve: bool = True  # re-solve the SVM at every line-search trial
    strict_budget: bool = False  # refuse evictions of positive-weight kernels

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.cache_budget < self.batch_size + 1:
            raise ValueError("cache_budget must be >= batch_size + 1")
        if self.prune_tol < 0 or self.violation_tol < 0:
            raise ValueError("tolerances must be non-negative")
        if self.max_outer < 1 or self.max_weight_iters < 1 or self.inner_rounds < 1:
            raise ValueError("iteration caps must be >= 1")

    def sdca_config(self, tol=None):
        return SdcaConfig(
            C=self.C,
            epochs=self.epochs,
            seed=self.seed,
            stall_tol=self.stall_tol if tol is None else tol,
        )


def _resolve(y, K, cfg, warm=None, rounds=None, tol=None):
    """Inner solve to the stall tolerance, in chunks of cfg.epochs.

    Chunked warm-started calls are equivalent to one long run (the epoch
    counter keeps the permutation stream advancing), so all objective
    evaluations share one budget convention and stay comparable.
    """
    inner = cfg.sdca_config(tol)
    state = warm
    for _ in range(cfg.inner_rounds if rounds is None else rounds):
        state = sdca(y, K, inner, warm=state)
        if state.stalled:
            break
    return state


class CandidatePool:
    """Open candidate kernels, scored lazily without materializing their Grams."""

    def __init__(self, maps):
        self.maps = list(maps)
        if not self.maps:
            raise ValueError("candidate stream is empty")
        dims = {m.dim for m in self.maps}
        if len(dims) != 1:
            raise ValueError("candidate maps disagree on dimension")
        self.alive = np.ones(len(self.maps), dtype=bool)
        self.centers = np.stack([m.center for m in self.maps])
        self.gammas = np.array([m.gamma for m in self.maps])

    def __len__(self):
        return len(self.maps)

    @property
    def n_alive(self):
        return int(self.alive.sum())

    def take(self, pos):
        self.alive[pos] = False
        return self.maps[pos]

    def restore(self, pos):
        self.alive[pos] = True

    def alignment_scores(self, sv_X, sv_coef):
        """0.5 * || sum_i coef_i phi_c(x_i) ||^2 for every live candidate.

        `sv_coef` is alpha * y restricted to support vectors. Cost is
        O(s * d) per candidate through the explicit feature map; dead
        positions come back as -inf.
        """
        scores = np.full(len(self.maps), -np.inf)
        live = np.flatnonzero(self.alive)
        if live.size == 0:
            return scores
        if sv_X.shape[0] == 0 or not np.any(sv_coef):
            scores[live] = 0.0
            return scores
        groups = {}
        for pos in live:
            m = self.maps[pos]
            groups.setdefault((m.family, m.scope, m.gamma), []).append(pos)
        for (family, scope, gamma), positions in groups.items():
            centers = self.centers[positions]
            if scope == "global":
                sq = cdist(centers, sv_X, metric="sqeuclidean")
                W = locality_weight_sq(family, gamma, sq) * sv_coef
                V = W @ sv_X - W.sum(axis=1)[:, None] * centers
            else:
                V = np.empty_like(centers)
                for row, center in enumerate(centers):
                    delta = sv_X - center
                    H = locality_weight(family, gamma, np.abs(delta))
                    V[row] = sv_coef @ (H * delta)
            scores[positions] = 0.5 * np.einsum("ij,ij->i", V, V)
        return scores


def alignment_score(alpha, y, gram_block):
    """0.5 * (alpha*y)^T K (alpha*y), summed over support vectors only."""
    a = np.asarray(getattr(alpha, "alpha", alpha), dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    sv = np.flatnonzero(a > 0.0)
    if sv.size == 0:
        return 0.0
    coef = a[sv] * yv[sv]
    V = _gram_values(gram_block)
    return float(0.5 * coef @ V[np.ix_(sv, sv)] @ coef)


@dataclass
class ActiveKernel:
    cmap: object
    block: object
    beta: float
    pool_pos: int = -1  # position in the candidate pool, -1 if external


@dataclass
class ActiveKernelState:
    """Working set of the trainer: active kernels, open pool, dual solution."""

    active: list
    pool: CandidatePool
    features: np.ndarray
    y: np.ndarray
    dual: object = None
    evictions: int = 0
    peak_cached: int = 0

    def betas(self):
        return np.array([ak.beta for ak in self.active])

    def note_cached(self):
        self.peak_cached = max(self.peak_cached, len(self.active))


@dataclass
class KktReport:
    """Optimality certificate for a trained combination.

    `nu` is the largest alignment score among positive-weight kernels; active
    kernels should match it up to the tolerance and no open candidate should
    exceed the insertion threshold derived from it.
    """

    scores: np.ndarray
    betas: np.ndarray
    nu: float
    mu: np.ndarray
    violations: list
    tol: float
    equalized: bool

    @property
    def certified(self):
        return self.equalized and not self.violations

    @property
    def max_violation(self):
        if not self.violations:
            return 0.0
        return max(v["score"] - self.nu for v in self.violations)


def insertion_threshold(nu, tol):
    """Scores strictly above this admit a candidate into the active set."""
    return nu * (1.0 + tol) if nu > 0 else nu + tol


def _combined_values(active):
    total = active[0].beta * active[0].block.values
    for ak in active[1:]:
        total = total + ak.beta * ak.block.values
    return total


def _renormalize(state):
    total = sum(ak.beta for ak in state.active)
    if total > 0:
        for ak in state.active:
            ak.beta /= total
    else:
        for ak in state.active:
            ak.beta = 1.0 / len(state.active)


def _discard(state, idx, cfg):
    ak = state.active.pop(idx)
    if cfg.reprocess and ak.pool_pos >= 0:
        state.pool.restore(ak.pool_pos)


def _make_room(state, cfg):
    """Free one cache slot, least-weight kernel first. Under strict_budget a
    positive-weight kernel is never evicted and the caller stops inserting."""
    betas = state.betas()
    idx = int(np.argmin(betas))
    if cfg.strict_budget and betas[idx] > cfg.prune_tol:
        return False
    _discard(state, idx, cfg)
    _renormalize(state)
    state.evictions += 1
    return True


def probe_and_insert(state, cfg):
    """Scan live candidates and admit up to batch_size violators.

    A candidate enters when its alignment score strictly exceeds the
    insertion threshold at the current dual solution. New kernels start at
    weight zero, which leaves the combined Gram (and the objective) unchanged
    until the next weight solve. Returns the number of kernels inserted.
    """
    dual = state.dual
    sv = np.flatnonzero(dual.alpha > 0.0)
    if sv.size == 0:
        return 0
    betas = state.betas()
    positive = betas > cfg.prune_tol
    g = max(
        alignment_score(dual.alpha, state.y, ak.block)
        for ak, pos in zip(state.active, positive)
        if pos
    )
    threshold = insertion_threshold(g, cfg.violation_tol)
    coef = (dual.alpha * state.y)[sv]
    scores = state.pool.alignment_scores(state.features[sv], coef)
    live = np.flatnonzero(state.pool.alive)
    violating = live[scores[live] > threshold]
    if violating.size == 0:
        return 0
    # best score first; equal scores resolved by stream position
    order = np.lexsort((violating, -scores[violating]))
    chosen = violating[order][: cfg.batch_size]
    inserted = 0
    for pos in chosen:
        if len(state.active) >= cfg.cache_budget and not _make_room(state, cfg):
            break
        cmap = state.pool.take(pos)
        state.active.append(ActiveKernel(cmap, gram(cmap, state.features), 0.0, pool_pos=int(pos)))
        state.note_cached()
        inserted += 1
    return inserted


def prune(state, cfg):
    """Drop kernels whose weight collapsed to (numerical) zero.

    With reprocess enabled they return to the open pool, otherwise they are
    forgotten. The active set never empties: if everything is prunable the
    largest-weight kernel stays. Returns the number of kernels removed.
    """
    betas = state.betas()
    drop = [i for i, b in enumerate(betas) if b <= cfg.prune_tol]
    if len(drop) == len(state.active) and drop:
        drop.remove(int(np.argmax(betas)))
    for i in reversed(drop):
        _discard(state, i, cfg)
    if drop:
        _renormalize(state)
    return len(drop)


def solve_mkl_weights(active, y, state, cfg):
    """Reduced-gradient descent on the simplex weights.

    `state` must be the inner solution for the current weights. The gradient
    of the outer objective in each weight is the negated alignment score, the
    reduced direction is taken against the largest-weight coordinate, and an
    Armijo backtracking line search re-solves the inner SVM (warm-started) at
    each trial point. Every accepted step carries its own re-solved inner
    state, so the measured objective never increases across accepted steps.

    Returns (state, stalled); stalled means the line search could not find a
    decrease before the halving cap.
    """
    if len(active) == 1:
        active[0].beta = 1.0
        return state, False
    betas = np.array([ak.beta for ak in active])
    state = _resolve(y, sum(b * ak.block.values for b, ak in zip(betas, active)), cfg, warm=state)
    J_cur = objective_from_state(state, y)
    stalled = False
    for _ in range(cfg.max_weight_iters):
        scores = np.array([alignment_score(state.alpha, y, ak.block) for ak in active])
        positive = betas > cfg.prune_tol
        if not positive.any():
            positive = betas == betas.max()
        nu = float(scores[positive].max())
        etol = 0.5 * cfg.violation_tol * max(nu, 1e-12)
        if nu - scores[positive].min() <= etol and scores.max() <= nu + etol:
            break
        mu_idx = int(np.argmax(betas))
        direction = scores - scores[mu_idx]
        direction[(betas <= 0.0) & (direction < 0.0)] = 0.0
        direction[mu_idx] = 0.0
        direction[mu_idx] = -direction.sum()
        if not np.any(direction):
            break
        dirderiv = float(-(scores @ direction))
        negative = direction < 0.0
        t = float(np.min(betas[negative] / -direction[negative]))
        accepted = False
        for _ in range(MAX_HALVINGS):
            trial = np.maximum(betas + t * direction, 0.0)
            K_trial = sum(b * ak.block.values for b, ak in zip(trial, active))
            if cfg.line_search_resolve:
                cand = _resolve(y, K_trial, cfg, warm=state)
                J_trial = objective_from_state(cand, y)
                if J_trial <= J_cur + ARMIJO_C1 * t * dirderiv:
                    improvement = J_cur - J_trial
                    state, J_cur, betas, accepted = cand, J_trial, trial, True
                    break
            else:
                # linear model in the weights at fixed alpha; always decreases
                state = _resolve(y, K_trial, cfg, warm=state)
                J_new = objective_from_state(state, y)
                improvement = J_cur - J_new
                J_cur, betas, accepted = J_new, trial, True
                break
            t *= 0.5
        if not accepted:
            stalled = True
            break
        if improvement <= PLATEAU_RTOL * max(1.0, abs(J_cur)):
            break  # measured progress is below solver resolution
    total = betas.sum()
    if total > 0:
        betas = betas / total
    for ak, b in zip(active, betas):
        ak.beta = float(b)
    return state, stalled


def build_kkt_report(state, cfg):
    """Alignment scores of the active set plus a scan of the open pool."""
    dual = state.dual
    scores = np.array([alignment_score(dual.alpha, state.y, ak.block) for ak in state.active])
    betas = state.betas()
    positive = betas > cfg.prune_tol
    if not positive.any():
        positive = betas == betas.max()
    nu = float(scores[positive].max())
    mu = nu - scores
    threshold = insertion_threshold(nu, cfg.violation_tol)
    violations = []
    sv = np.flatnonzero(dual.alpha > 0.0)
    if sv.size:
        coef = (dual.alpha * state.y)[sv]
        cscores = state.pool.alignment_scores(state.features[sv], coef)
        for pos in np.flatnonzero(state.pool.alive & (cscores > threshold)):
            violations.append(
                {
                    "position": int(pos),
                    "gamma": float(state.pool.gammas[pos]),
                    "score": float(cscores[pos]),
                }
            )
    etol = cfg.violation_tol * max(nu, 1e-12)
    equalized = bool(np.all(scores[positive] >= nu - etol))
    return KktReport(scores, betas, nu, mu, violations, cfg.violation_tol, equalized)


@dataclass
class MklResult:
    dual: object
    betas: np.ndarray
    maps: list
    report: KktReport
    converged: bool
    n_outer: int
    history: list = field(default_factory=list)
    evictions: int = 0
    peak_cached: int = 0

    def weighted(self):
        return list(zip(self.maps, self.betas))


def sequential_mkl(data, candidates, config, progress=None):
    """Train the sparse kernel combination over a streamed candidate set.

    The active set starts with the first streamed candidate at weight one.
    Each outer iteration refreshes the inner solve on the combined Gram,
    probes the open set, re-optimizes the weights, and prunes. Training
    converges when a full pass inserts nothing and the final scan certifies
    the optimality conditions; otherwise the iteration cap flags the result
    as non-converged. `progress`, when given, receives one dict per outer
    iteration (the machine-readable training log).
    """
    pool = CandidatePool(candidates)
    state = ActiveKernelState(
        active=[], pool=pool, features=data.features, y=data.labels
    )
    first = pool.take(0)
    state.active.append(ActiveKernel(first, gram(first, data.features), 1.0, pool_pos=0))
    state.note_cached()
    history = []
    converged = False
    report = None
    n_outer = 0
    clean_scans = 0
    for it in range(config.max_outer):
        n_outer = it + 1
        K = _combined_values(state.active)
        state.dual = _resolve(data.labels, K, config, warm=state.dual)
        J_pre = objective_from_state(state.dual, data.labels)
        evicted_before = state.evictions
        inserted = probe_and_insert(state, config)
        state.dual, stalled = solve_mkl_weights(state.active, data.labels, state.dual, config)
        J_post = objective_from_state(state.dual, data.labels)
        pruned = prune(state, config)
        if inserted == 0:
            # candidate scan came back clean: polish the inner solution hard,
            # then give the weight solve one concentrated pass at the polished
            # dual so the certificate reflects a converged saddle point
            K = _combined_values(state.active)
            state.dual = _resolve(
                data.labels, K, config, warm=state.dual,
                rounds=200, tol=config.stall_tol / 10.0,
            )
            boost = replace(
                config,
                max_weight_iters=4 * config.max_weight_iters,
                inner_rounds=4 * config.inner_rounds,
            )
            state.dual, stalled = solve_mkl_weights(
                state.active, data.labels, state.dual, boost
            )
            pruned += prune(state, config)
            J_post = objective_from_state(state.dual, data.labels)
        report = build_kkt_report(state, config)
        record = {
            "iter": it,
            "n_active": len(state.active),
            "objective_pre_insert": J_pre,
            "objective": J_post,
            "inserted": inserted,
            "pruned": pruned,
            "evicted": state.evictions - evicted_before,
            "max_violation": report.max_violation,
            "beta_sum": float(state.betas().sum()),
            "live_grams": len(state.active),
            "support_vectors": int(np.count_nonzero(state.dual.alpha > 0.0)),
            "weight_solve_stalled": stalled,
            "open_candidates": state.pool.n_alive,
        }
        history.append(record)
        if progress is not None:
            progress(record)
        if inserted == 0 and not report.violations:
            if report.certified:
                converged = True
                break
            # scores will not equalize at this tolerance: one more weight
            # solve runs from the polished dual, then a second clean scan
            # stops the loop (non-converged)
            if clean_scans >= 1:
                break
            clean_scans += 1
        else:
            clean_scans = 0
    # the returned decision values match the final (post-prune) combination exactly
    K = _combined_values(state.active)
    state.dual.yhat = K @ (state.dual.alpha * data.labels)
    return MklResult(
        dual=state.dual,
        betas=state.betas(),
        maps=[ak.cmap for ak in state.active],
        report=report,
        converged=converged,
        n_outer=n_outer,
        history=history,
        evictions=state.evictions,
        peak_cached=state.peak_cached,
    )
