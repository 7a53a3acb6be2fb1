"""Controlled generation: chain -> caster -> generator -> score matrix -> graph."""

from __future__ import annotations

import numpy as np

from .assembly import ScoreMatrix, accumulate, binarize, symmetrize
from .errors import ConfigError
from .graph import LabeledGraph
from .markov import MarkovControl, sample_label_sequences
from .nn import bce_losses, grad_check, sigmoid
from .rng import derived_rng
from .walks import one_hot


def generate_walks(model, control: MarkovControl, count: int, seed: int, chunk: int = 10_000):
    """Yield node-walk chunks ``(b, T)`` for ``count`` walks under ``control``.

    Chunk ``c`` draws its label sequences from rows ``c * chunk ...`` of the
    chain's streams and its generator noise from a generator keyed by ``c``,
    so the output depends only on ``(count, seed, chunk)``.
    """
    if count < 1:
        raise ConfigError("walk budget must be >= 1")
    if control.k != model.caster.k:
        raise ConfigError(f"control has {control.k} labels, model expects {model.caster.k}")
    T = model.walk_length
    for c, start in enumerate(range(0, count, chunk)):
        b = min(chunk, count - start)
        labels = sample_label_sequences(control, b, T, seed, offset=start)
        conds = model.conditions(labels)
        yield model.generator.sample(conds, derived_rng(seed, 2, c), model.tau)


def generate_graph(model, graph: LabeledGraph, control: MarkovControl, walk_budget: int,
                   target_edges: int | None = None, seed: int = 0, chunk: int = 10_000,
                   method: str = "probabilistic") -> tuple[LabeledGraph, ScoreMatrix]:
    """Generate a graph over ``graph``'s nodes; labels are inherited from it."""
    if target_edges is None:
        target_edges = graph.num_edges
    scores = accumulate(generate_walks(model, control, walk_budget, seed, chunk), graph.num_nodes)
    scores = symmetrize(scores)
    edges = binarize(scores, target_edges, seed=seed, method=method)
    return graph.with_edges(edges), scores


def model_grad_checks(model, graph: LabeledGraph, cfg, batch: int = 4, steps: int | None = None,
                      max_checks: int = 500, seed: int = 0) -> dict:
    """Finite-difference checks of caster, generator and discriminator.

    The generator is checked in relaxed mode (the straight-through forward
    value is piecewise constant, so only the relaxed path has a derivative
    that finite differences can see) with the noise held fixed, once under a
    random linear loss and once through a frozen discriminator. ``steps``
    defaults to the configured walk length.
    """
    from .walks import WalkConfig, WalkSampler

    T = steps or cfg.walk_length
    rng = np.random.default_rng(seed)
    wb = WalkSampler(graph).sample(WalkConfig(T, batch, cfg.p, cfg.q, seed))
    x = one_hot(wb.nodes, graph.num_nodes)
    s = one_hot(wb.labels, graph.num_labels)
    c, g, d = model.caster, model.generator, model.discriminator
    reports = {}

    _, grads = c.loss_and_grads(s)
    reports["caster"] = grad_check(lambda: c.loss_and_grads(s)[0], c.params, grads,
                                   max_checks=max_checks, seed=seed)

    conds = c(s)
    z, gumbel = g.noise(rng, batch, T)
    tau = cfg.tau

    # a fixed random projection keeps generator gradients well above the
    # finite-difference noise floor; the D-composed loss checks the chain
    proj = rng.standard_normal((batch, T, graph.num_nodes))

    def g_proj():
        return float((proj * g.forward(conds, z, gumbel, tau, straight_through=False)[0]).sum())

    fake, cache = g.forward(conds, z, gumbel, tau, straight_through=False)
    reports["generator"] = grad_check(g_proj, g.params, g.backward(proj, cache),
                                      max_checks=max_checks, seed=seed)

    def g_loss():
        out, _ = g.forward(conds, z, gumbel, tau, straight_through=False)
        return bce_losses(0.5, d(out, conds))[1]

    logit, dcache = d.forward(fake, conds)
    dfake = d.backward((sigmoid(logit) - 1.0) / batch, dcache, {})
    reports["generator_through_discriminator"] = grad_check(
        g_loss, g.params, g.backward(dfake, cache), max_checks=max_checks, seed=seed)

    def d_loss():
        return bce_losses(d(x, conds), d(fake, conds))[0]

    gd: dict = {}
    lr_, cr = d.forward(x, conds)
    d.backward((sigmoid(lr_) - 1.0) / batch, cr, gd)
    lf, cf = d.forward(fake, conds)
    d.backward(sigmoid(lf) / batch, cf, gd)
    reports["discriminator"] = grad_check(d_loss, d.params, gd, max_checks=max_checks, seed=seed)
    return reports
