"""Replayable run records: construction steps, config snapshot, JSON I/O.

A trace is fully self-contained (the avoid family is embedded as
coefficients, not referenced by path) and serialization is canonical —
sorted keys, fixed separators — so identical configs produce byte-identical
files.  Every rational is written as ``"num/den"`` in lowest terms; giant
values stay exact.  A ``.gz`` suffix selects gzip transport.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field
from pathlib import Path

from gmpy2 import mpq

from .errors import ParseError
from .poly import Poly
from .ratcore import Rat, parse_rat, rat_str

FORMAT_VERSION = 1


@dataclass
class StepRecord:
    """One construction step; ``m`` is the index of the new node/epsilon."""

    m: int
    kind: str                      # "seed" | "odd" | "even"
    j: int | None                  # enumeration index of the node, if computable
    node: Rat
    eps: Rat
    value: Rat
    aux: dict = field(default_factory=dict)
    avoid_witness: dict | None = None

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "kind": self.kind,
            "j": self.j,
            "node": rat_str(self.node),
            "eps": rat_str(self.eps),
            "value": rat_str(self.value),
            "aux": self.aux,
            "avoid_witness": self.avoid_witness,
        }

    @classmethod
    def from_json(cls, data: dict) -> "StepRecord":
        return cls(
            m=data["m"],
            kind=data["kind"],
            j=data["j"],
            node=parse_rat(data["node"]),
            eps=parse_rat(data["eps"]),
            value=parse_rat(data["value"]),
            aux=data.get("aux", {}),
            avoid_witness=data.get("avoid_witness"),
        )


@dataclass
class Trace:
    mode: str                      # "basic" | "heights" | "pila"
    config: dict
    steps: list = field(default_factory=list)
    seed_repair: dict | None = None
    stages: list = field(default_factory=list)   # pila-mode stage records
    version: int = FORMAT_VERSION

    # -- reconstruction -------------------------------------------------------

    def node_value_pairs(self) -> list[tuple[Rat, Rat]]:
        """Assigned (x, f(x)) pairs: the two fixed endpoints plus all steps."""
        pairs = [(mpq(0), mpq(0)), (mpq(1), mpq(1))]
        for rec in self.steps:
            pairs.append((rec.node, rec.value))
        return pairs

    def assigned_value(self, q) -> Rat | None:
        """Exact pinned value at q, or None when q is not an assigned node."""
        q = mpq(q)
        for node, value in self.node_value_pairs():
            if node == q:
                return value
        return None

    def depth(self) -> int:
        if not self.steps:
            return 2
        return max(rec.m for rec in self.steps)

    def eps_sequence(self) -> list[Rat]:
        """[eps_1, eps_2, ..., eps_depth] with the structural seeds in front."""
        out = [mpq(1), mpq(0)]
        for rec in self.steps:
            if rec.kind != "seed":
                out.append(rec.eps)
        return out

    def nodes_in_order(self) -> list[Rat]:
        """x_{j_0}, x_{j_1}, ... : 0, 1, then one node per recorded step."""
        out = [mpq(0), mpq(1)]
        for rec in self.steps:
            out.append(rec.node)
        return out

    def partial_sum(self, n: int) -> Poly:
        """Rebuild f_n directly from the recorded nodes and epsilons."""
        if n < 2:
            if n < 1:
                raise ValueError("partial sums start at n = 1")
            return Poly.identity()
        nodes = self.nodes_in_order()
        eps = self.eps_sequence()
        if n > len(eps):
            raise ValueError(f"trace holds {len(eps)} stages, asked for {n}")
        f = Poly.identity()
        prod = Poly.constant(1)
        for node in nodes[:2]:
            prod = prod.mul_linear(node)
        for k in range(3, n + 1):
            prod = prod.mul_linear(nodes[k - 1])
            if eps[k - 1] != 0:
                f = f + (eps[k - 1] / k) * prod
        return f

    def correction_term(self, n: int) -> Poly:
        """The degree-n polynomial added at stage n (zero for n <= 2)."""
        if n <= 2:
            return Poly.zero() if n != 1 else Poly.identity()
        nodes = self.nodes_in_order()
        eps = self.eps_sequence()
        prod = Poly.constant(1)
        for node in nodes[:n]:
            prod = prod.mul_linear(node)
        return (eps[n - 1] / n) * prod

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        data = {
            "version": self.version,
            "mode": self.mode,
            "config": self.config,
            "steps": [rec.to_json() for rec in self.steps],
        }
        if self.seed_repair is not None:
            data["seed_repair"] = self.seed_repair
        if self.stages:
            data["stages"] = self.stages
        return data

    @classmethod
    def from_json(cls, data: dict) -> "Trace":
        try:
            return cls(
                mode=data["mode"],
                config=data["config"],
                steps=[StepRecord.from_json(s) for s in data["steps"]],
                seed_repair=data.get("seed_repair"),
                stages=data.get("stages", []),
                version=data["version"],
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed trace: {exc}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True,
                          separators=(",", ":")) + "\n"

    def save(self, path) -> None:
        path = Path(path)
        text = self.dumps()
        if path.suffix == ".gz":
            with open(path, "wb") as raw:  # mtime pinned for byte-identical output
                with gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as fh:
                    fh.write(text.encode("utf-8"))
        else:
            path.write_text(text)

    @classmethod
    def load(cls, path) -> "Trace":
        path = Path(path)
        try:
            if path.suffix == ".gz":
                with gzip.open(path, "rt", encoding="utf-8") as fh:
                    text = fh.read()
            else:
                text = path.read_text()
            return cls.from_json(json.loads(text))
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError(f"cannot load trace {path}: {exc}") from exc
