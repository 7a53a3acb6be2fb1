"""Adversarial training of caster, generator and discriminator.

One iteration:

1. sample ``m`` real walks and their label walks;
2. one Adam step on the caster's next-label cross-entropy;
3. build conditions ``s~`` with the caster;
4. one generator step on ``-log D(G(z | s~) | s~)``;
5. ``omega`` discriminator steps on real ``(x | cond)`` against fake ``(G(z | s~) | s~)``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericFault
from .graph import LabeledGraph, is_connected
from .markov import MarkovControl, empirical_markov, sample_label_sequences
from .model import Discriminator, Generator, ShadowCaster
from .nn import Adam, bce_losses, check_finite, load_params, save_params, sigmoid
from .rng import derived_rng
from .walks import WalkConfig, WalkSampler, one_hot

logger = logging.getLogger(__name__)

COND_MODES = ("caster", "markov", "true")

# walk-stream offsets kept apart from the per-iteration minibatches
FIT_OFFSET = 1 << 40
PRETRAIN_OFFSET = 1 << 41


@dataclass
class TrainConfig:
    iterations: int = 5000
    batch_size: int = 128
    walk_length: int = 16
    omega: int = 3
    lr_caster: float = 0.01
    lr_gan: float = 0.0002
    tau: float = 1.0
    tau_final: float | None = None
    seed: int = 0
    checkpoint_interval: int = 500
    p: float = 1.0
    q: float = 1.0
    z_dim: int = 16
    caster_hidden: int = 10
    generator_hidden: int = 50
    discriminator_hidden: int = 40
    # "caster": conditions are C(s) of the real batch's label walks and real
    # walks are scored with them too; "markov": C applied to label walks drawn
    # from the chain fitted to the training shadows; "true": like "caster" but
    # real walks are scored with their own one-hot label walks
    cond_mode: str = "caster"
    pretrain_caster: int = 0
    probe_interval: int = 500
    probe_walks: int = 100_000
    probe_chunk: int = 10_000
    markov_smoothing: float = 0.01
    markov_fit_walks: int = 10_000
    preflight_check: bool = True

    def __post_init__(self):
        for name in ("iterations", "batch_size", "omega", "checkpoint_interval", "z_dim",
                     "caster_hidden", "generator_hidden", "discriminator_hidden"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.walk_length < 2:
            raise ConfigError("walk_length must be >= 2")
        for name in ("lr_caster", "lr_gan", "tau", "p", "q"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.tau_final is not None and not self.tau_final > 0:
            raise ConfigError("tau_final must be positive")
        if self.cond_mode not in COND_MODES:
            raise ConfigError(f"cond_mode must be one of {COND_MODES}")
        if self.probe_interval < 0 or self.probe_walks < 0 or self.pretrain_caster < 0:
            raise ConfigError("probe and pretrain settings must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)

    def walk_config(self) -> WalkConfig:
        return WalkConfig(self.walk_length, self.batch_size, self.p, self.q, self.seed)

    def tau_at(self, it: int) -> float:
        if self.tau_final is None or self.iterations <= 1:
            return self.tau
        frac = min(it / (self.iterations - 1), 1.0)
        return self.tau + frac * (self.tau_final - self.tau)


@dataclass
class ShadowCastModel:
    caster: ShadowCaster
    generator: Generator
    discriminator: Discriminator
    empirical: MarkovControl
    walk_length: int = 16
    tau: float = 1.0

    @classmethod
    def build(cls, n: int, k: int, cfg: TrainConfig, empirical: MarkovControl):
        rng = derived_rng(cfg.seed, 0xC0DE)
        return cls(
            ShadowCaster(k, cfg.caster_hidden, rng),
            Generator(n, k, cfg.generator_hidden, cfg.z_dim, rng),
            Discriminator(n, k, cfg.discriminator_hidden, rng),
            empirical,
            cfg.walk_length,
            cfg.tau,
        )

    def groups(self) -> dict:
        return {"caster": self.caster.params, "generator": self.generator.params,
                "discriminator": self.discriminator.params}

    def snapshot(self) -> dict:
        return {g: {k: v.copy() for k, v in p.items()} for g, p in self.groups().items()}

    def restore(self, snap: dict) -> None:
        for g, params in self.groups().items():
            for k in params:
                params[k][...] = snap[g][k]

    def conditions(self, labels: np.ndarray) -> np.ndarray:
        return self.caster(one_hot(labels, self.caster.k))

    def save(self, path, extra_meta: dict | None = None) -> None:
        meta = {"n": self.generator.n, "k": self.caster.k, "walk_length": self.walk_length,
                "tau": self.tau, "z_dim": self.generator.z_dim,
                "hidden": [self.caster.lstm.hidden_dim, self.generator.hidden,
                           self.discriminator.lstm.hidden_dim],
                "empirical": self.empirical.to_dict(), **(extra_meta or {})}
        save_params(path, self.groups(), meta)

    @classmethod
    def load(cls, path) -> "ShadowCastModel":
        groups, meta = load_params(path)
        hc, hg, hd = meta["hidden"]
        model = cls(
            ShadowCaster(meta["k"], hc),
            Generator(meta["n"], meta["k"], hg, meta["z_dim"]),
            Discriminator(meta["n"], meta["k"], hd),
            MarkovControl.from_dict(meta["empirical"]),
            meta["walk_length"],
            meta["tau"],
        )
        model.restore(groups)
        return model


@dataclass
class TrainResult:
    model: ShadowCastModel
    history: list = field(default_factory=list)  # (iter, loss_c, loss_g, loss_d)
    probes: list = field(default_factory=list)  # (iter, |dCLUST|)
    best_iteration: int | None = None
    generator_updates: int = 0
    discriminator_updates: int = 0


def history_csv(history) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["iter", "loss_c", "loss_g", "loss_d"])
    for it, lc, lg, ld in history:
        w.writerow([it, repr(float(lc)), repr(float(lg)), repr(float(ld))])
    return buf.getvalue()


class Trainer:
    """Holds models, optimizers and the graph; ``run`` performs the iterations."""

    def __init__(self, graph: LabeledGraph, cfg: TrainConfig):
        if not is_connected(graph):
            raise ConfigError("training graph must be connected; run lcc() first")
        self.graph = graph
        self.cfg = cfg
        self.sampler = WalkSampler(graph)
        wc = cfg.walk_config()
        fit = self.sampler.sample(wc, offset=FIT_OFFSET, count=cfg.markov_fit_walks)
        empirical = empirical_markov(fit.labels, graph.num_labels, cfg.markov_smoothing)
        self.model = ShadowCastModel.build(graph.num_nodes, graph.num_labels, cfg, empirical)
        m = self.model
        self.opt_c = Adam(m.caster.params, cfg.lr_caster)
        self.opt_g = Adam(m.generator.params, cfg.lr_gan)
        self.opt_d = Adam(m.discriminator.params, cfg.lr_gan)
        self.iteration = 0
        self.result = TrainResult(m)
        self._best = None
        self._best_score = math.inf
        self._real_clust = None
        # extra fields written into every checkpoint (e.g. a config fingerprint)
        self.artifact_meta: dict = {}

    # ------------------------------------------------------------ pieces

    def real_batch(self, it: int, offset: int | None = None):
        if offset is None:
            offset = it * self.cfg.batch_size
        batch = self.sampler.sample(self.cfg.walk_config(), offset=offset)
        n, k = self.graph.num_nodes, self.graph.num_labels
        return one_hot(batch.nodes, n), one_hot(batch.labels, k)

    def build_conditions(self, it: int, s: np.ndarray):
        """Return ``(conds_fake, conds_real)`` for this iteration."""
        m = self.model
        mode = self.cfg.cond_mode
        if mode == "markov":
            seqs = sample_label_sequences(m.empirical, len(s), self.cfg.walk_length,
                                          self.cfg.seed, offset=it * len(s))
            conds = m.caster(one_hot(seqs, m.caster.k))
            return conds, conds
        conds = m.caster(s)
        return conds, (s if mode == "true" else conds)

    def generator_step(self, conds, z, gumbel, tau) -> float:
        g, d = self.model.generator, self.model.discriminator
        fake, cache = g.forward(conds, z, gumbel, tau)
        logit, dcache = d.forward(fake, conds)
        _, loss_g = bce_losses(0.5, sigmoid(logit))
        dlogit = (sigmoid(logit) - 1.0) / len(logit)
        dfake = d.backward(dlogit, dcache, {})
        grads = g.backward(dfake, cache)
        self.opt_g.step(grads)
        self.result.generator_updates += 1
        return loss_g

    def discriminator_step(self, real, conds_real, fake, conds_fake) -> float:
        d = self.model.discriminator
        # real and fake share one pass; the batch is split again for the loss
        b = len(real)
        logit, cache = d.forward(np.concatenate([real, fake]), np.concatenate([conds_real, conds_fake]))
        prob = sigmoid(logit)
        loss_d, _ = bce_losses(prob[:b], prob[b:])
        dlogit = np.concatenate([(prob[:b] - 1.0) / b, prob[b:] / (len(prob) - b)])
        grads: dict = {}
        d.backward(dlogit, cache, grads)
        self.opt_d.step(grads)
        self.result.discriminator_updates += 1
        return loss_d

    def step(self) -> tuple:
        it = self.iteration
        cfg = self.cfg
        m = self.model
        real, s = self.real_batch(it)
        loss_c, grads_c = m.caster.loss_and_grads(s)
        self.opt_c.step(grads_c)
        conds_fake, conds_real = self.build_conditions(it, s)
        tau = cfg.tau_at(it)
        z, gumbel = m.generator.noise(derived_rng(cfg.seed, 1, it), len(s), cfg.walk_length)
        loss_g = self.generator_step(conds_fake, z, gumbel, tau)
        fake, _ = m.generator.forward(conds_fake, z, gumbel, tau)
        losses_d = [self.discriminator_step(real, conds_real, fake, conds_fake)
                    for _ in range(cfg.omega)]
        loss_d = float(np.mean(losses_d))
        check_finite("losses", np.array([loss_c, loss_g, loss_d]))
        for params in m.groups().values():
            check_finite("parameters", *params.values())
        self.iteration += 1
        row = (self.iteration, loss_c, loss_g, loss_d)
        self.result.history.append(row)
        return row

    def pretrain(self) -> None:
        for i in range(self.cfg.pretrain_caster):
            _, s = self.real_batch(i, offset=PRETRAIN_OFFSET + i * self.cfg.batch_size)
            _, grads = self.model.caster.loss_and_grads(s)
            self.opt_c.step(grads)

    def probe(self) -> float:
        """|CLUST(real) - CLUST(generated)| with the empirical chain as control."""
        from .metrics import stats
        from .pipeline import generate_graph

        if self._real_clust is None:
            self._real_clust = stats(self.graph).clust
        gen, _ = generate_graph(self.model, self.graph, self.model.empirical,
                                self.cfg.probe_walks, self.graph.num_edges,
                                seed=self.cfg.seed + 1, chunk=self.cfg.probe_chunk)
        return abs(stats(gen).clust - self._real_clust)

    def preflight(self, batch: int = 4, max_checks: int = 200) -> dict:
        """Gradient check of all three models on a small frozen batch."""
        from .pipeline import model_grad_checks

        reports = model_grad_checks(self.model, self.graph, self.cfg, batch=batch,
                                    max_checks=max_checks)
        bad = [name for name, r in reports.items() if not r.passed]
        if bad:
            raise NumericFault(f"pre-flight gradient check failed for {bad}")
        return reports

    # ------------------------------------------------------------ loop

    def run(self, out_dir=None, iterations: int | None = None) -> TrainResult:
        cfg = self.cfg
        target = cfg.iterations if iterations is None else iterations
        if self.iteration == 0:
            if cfg.preflight_check:
                self.preflight()
            self.pretrain()
        last_good = None
        while self.iteration < target:
            try:
                self.step()
            except NumericFault as exc:
                raise NumericFault(f"iteration {self.iteration + 1}: {exc}", last_good) from exc
            it = self.iteration
            if cfg.probe_interval and cfg.probe_walks and it % cfg.probe_interval == 0:
                score = self.probe()
                self.result.probes.append((it, score))
                if score < self._best_score:
                    self._best_score = score
                    self._best = self.model.snapshot()
                    self.result.best_iteration = it
                    if out_dir is not None:
                        self.model.save(Path(out_dir) / "best.json",
                                        {"iteration": it, **self.artifact_meta})
            if out_dir is not None and (it % cfg.checkpoint_interval == 0 or it == target):
                last_good = self.save_state(out_dir)
        return self.result

    def best_model(self) -> ShadowCastModel:
        """Model restored to the best probe, or the current one without probes."""
        if self._best is None:
            return self.model
        m = ShadowCastModel.build(self.graph.num_nodes, self.graph.num_labels, self.cfg,
                                  self.model.empirical)
        m.restore(self._best)
        return m

    # ------------------------------------------------------------ persistence

    def save_state(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.model.save(out / "last.json", {"iteration": self.iteration, **self.artifact_meta})
        opt = {}
        for name, o in (("caster", self.opt_c), ("generator", self.opt_g),
                        ("discriminator", self.opt_d)):
            opt[name + ".m"] = o.state.m
            opt[name + ".v"] = o.state.v
        save_params(out / "optimizer.json", opt, {
            "t": {"caster": self.opt_c.state.t, "generator": self.opt_g.state.t,
                  "discriminator": self.opt_d.state.t},
            "iteration": self.iteration,
            "generator_updates": self.result.generator_updates,
            "discriminator_updates": self.result.discriminator_updates,
            "best_iteration": self.result.best_iteration,
            "best_score": None if math.isinf(self._best_score) else self._best_score,
            "probes": self.result.probes,
            **self.artifact_meta,
        })
        (out / "loss_history.csv").write_text(history_csv(self.result.history), encoding="utf-8")
        return out / "last.json"

    def load_state(self, out_dir) -> None:
        out = Path(out_dir)
        saved = ShadowCastModel.load(out / "last.json")
        self.model.restore(saved.snapshot())
        groups, meta = load_params(out / "optimizer.json")
        for name, o in (("caster", self.opt_c), ("generator", self.opt_g),
                        ("discriminator", self.opt_d)):
            for k in o.state.m:
                o.state.m[k][...] = groups[name + ".m"][k]
                o.state.v[k][...] = groups[name + ".v"][k]
            o.state.t = meta["t"][name]
        self.iteration = meta["iteration"]
        self.result.generator_updates = meta["generator_updates"]
        self.result.discriminator_updates = meta["discriminator_updates"]
        self.result.best_iteration = meta["best_iteration"]
        self.result.probes = [tuple(p) for p in meta["probes"]]
        if meta["best_score"] is not None:
            self._best_score = meta["best_score"]
            if (out / "best.json").exists():
                self._best = ShadowCastModel.load(out / "best.json").snapshot()
        self.result.history = _read_history(out / "loss_history.csv")[: self.iteration]


def _read_history(path) -> list:
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append((int(rec["iter"]), float(rec["loss_c"]), float(rec["loss_g"]),
                         float(rec["loss_d"])))
    return rows


def train(graph: LabeledGraph, cfg: TrainConfig, out_dir=None) -> TrainResult:
    """Run the full training loop; returns the best-probe model and the loss history."""
    trainer = Trainer(graph, cfg)
    result = trainer.run(out_dir)
    result.model = trainer.best_model()
    return result


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)

