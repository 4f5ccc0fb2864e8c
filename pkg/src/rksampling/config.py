"""Experiment configuration read from a sectioned ``key = value`` file.

Example::

    [space]
    generator = bspline        # indicator | bspline | gaussian | tabulated | powerlaw
    order = 2
    lattice = -8 12            # integer nodes in [lo, hi]; or  nodes = 0 0.5 2
    envelope = generator       # generator | indicator | gaussian | exponential
    A = 1
    B = 3

    [domain]
    boxes = 0 4                # lo hi per axis, boxes separated by ';'

    [run]
    p = 2
    delta = 0.1
    tau = 0.01
    step = 0.015625
    r = 25 50 100 200 400 800
    trials = 200
    seed = 20240
    output_dir = results

``RKSAMPLING_OUTPUT_DIR`` overrides ``output_dir``.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import Domain
from .space import Envelope, Generator, Lattice, Space

OUTPUT_ENV = "RKSAMPLING_OUTPUT_DIR"


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.replace(",", " ").split()]


@dataclass
class ExperimentConfig:
    generator: dict = field(default_factory=lambda: {"generator": "bspline", "order": "2"})
    lattice: str = "-8 12"
    nodes: str | None = None
    dim: int = 1
    envelope: dict = field(default_factory=lambda: {"envelope": "generator"})
    A: float = 1.0
    B: float = 3.0
    occupancy: float | None = None
    boxes: str = "0 4"
    p: float = 2.0
    delta: float = 0.1
    tau: float = 0.01
    eps: float | None = None
    a: float | None = None
    step: float = 1.0 / 64
    r_schedule: list = field(default_factory=lambda: [25, 50, 100, 200, 400, 800])
    trials: int = 200
    seed: int = 20240
    margin: float = 1.0
    output_dir: str = "results"
    plot: bool = False
    name: str = "experiment"

    # construction ----------------------------------------------------------

    def build_generator(self) -> Generator:
        g = self.generator
        kind = g.get("generator", "bspline").lower()
        n = self.dim
        if kind == "indicator":
            lo, hi = _floats(g.get("support", "0 0.5"))
            return Generator.indicator(lo, hi, n)
        if kind in ("bspline", "b-spline", "hat"):
            return Generator.bspline(int(g.get("order", 2)), n)
        if kind == "gaussian":
            return Generator.gaussian(float(g.get("width", 1.0)), n)
        if kind == "tabulated":
            return Generator.from_file(g["file"], n)
        if kind == "powerlaw":
            s = float(g.get("decay", 4.0))
            return Generator.custom(lambda t: (1.0 + np.abs(t)) ** (-s), n=n, label=f"powerlaw{s:g}")
        raise ValueError(f"unknown generator kind {kind!r}")

    def build_envelope(self, gen: Generator) -> Envelope:
        e = self.envelope
        kind = e.get("envelope", "generator").lower()
        if kind == "generator":
            env = Envelope.from_generator(gen)
        elif kind == "indicator":
            lo, hi = _floats(e.get("envelope_support", "0 0.5"))
            env = Envelope.indicator(lo, hi, self.dim)
        elif kind == "gaussian":
            env = Envelope.gaussian(float(e.get("envelope_width", 1.0)), self.dim)
        elif kind == "exponential":
            env = Envelope.exponential(float(e.get("envelope_scale", 1.0)), self.dim)
        else:
            raise ValueError(f"unknown envelope kind {kind!r}")
        C, alpha = e.get("tail_constant"), e.get("tail_exponent")
        if C is not None and alpha is not None:
            env = env.with_tail(float(C), float(alpha))
        return env

    def build_lattice(self) -> Lattice:
        if self.nodes:
            pts = np.array(_floats(self.nodes)).reshape(-1, self.dim)
            return Lattice(pts, self.occupancy)
        lo, hi = _floats(self.lattice)[:2]
        lat = Lattice.integer(lo, hi, self.dim)
        lat.occupancy = self.occupancy
        return lat

    def build_space(self) -> Space:
        gen = self.build_generator()
        return Space(gen, self.build_lattice(), self.build_envelope(gen), self.A, self.B, self.p)

    def build_domain(self) -> Domain:
        return Domain(self.boxes)

    @property
    def truncation_eps(self) -> float:
        return self.tau if self.eps is None else self.eps

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)

    # io ----------------------------------------------------------------------

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
        if not cp.read(path):
            raise FileNotFoundError(path)
        cfg = cls.from_parser(cp)
        cfg.name = Path(path).stem
        return cfg

    @classmethod
    def from_string(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";;"))
        cp.read_string(text)
        return cls.from_parser(cp)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "ExperimentConfig":
        cfg = cls()
        if cp.has_section("space"):
            s = dict(cp["space"])
            gen_keys = {"generator", "order", "width", "support", "file", "decay"}
            env_keys = {"envelope", "envelope_support", "envelope_width", "envelope_scale",
                        "tail_constant", "tail_exponent"}
            if "generator" in s:
                cfg.generator = {k: v for k, v in s.items() if k in gen_keys}
            if "envelope" in s or env_keys & s.keys():
                cfg.envelope = {"envelope": "generator", **{k: v for k, v in s.items() if k in env_keys}}
            cfg.lattice = s.get("lattice", cfg.lattice)
            cfg.nodes = s.get("nodes", cfg.nodes)
            cfg.dim = int(s.get("dim", cfg.dim))
            cfg.A = float(s.get("a", cfg.A))
            cfg.B = float(s.get("b", cfg.B))
            if "occupancy" in s:
                cfg.occupancy = float(s["occupancy"])
        if cp.has_section("domain"):
            cfg.boxes = cp["domain"].get("boxes", cfg.boxes)
        if cp.has_section("run"):
            r = cp["run"]
            cfg.p = r.getfloat("p", cfg.p)
            cfg.delta = r.getfloat("delta", cfg.delta)
            cfg.tau = r.getfloat("tau", cfg.tau)
            if "eps" in r:
                cfg.eps = r.getfloat("eps")
            if "level_a" in r:
                cfg.a = r.getfloat("level_a")
            cfg.step = r.getfloat("step", cfg.step)
            if "r" in r:
                cfg.r_schedule = [int(round(v)) for v in _floats(r["r"])]
            cfg.trials = r.getint("trials", cfg.trials)
            cfg.seed = r.getint("seed", cfg.seed)
            cfg.margin = r.getfloat("margin", cfg.margin)
            cfg.output_dir = r.get("output_dir", cfg.output_dir)
            cfg.plot = r.getboolean("plot", cfg.plot)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.step <= 0 or self.trials < 1 or any(r < 1 for r in self.r_schedule):
            raise ValueError("step, trials and r must be positive")
        if self.A <= 0 or self.B < self.A:
            raise ValueError("frame constants need 0 < A <= B")
        if not math.isfinite(self.step):
            raise ValueError("step must be finite")
