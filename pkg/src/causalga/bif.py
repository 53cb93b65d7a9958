"""Reader/writer for the discrete subset of the BIF format (bnlearn repository
style), plus access to the networks shipped with the package."""
from __future__ import annotations

import gzip
import hashlib
import re
from importlib import resources

import numpy as np

from .data import BayesNet
from .graph import CycleError, Dag

ROW_SUM_TOL = 1e-6


class BifError(ValueError):
    pass


class BifSyntaxError(BifError):
    def __init__(self, message, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + message)


class BifSemanticError(BifError):
    pass


_TOKEN_RE = re.compile(r"//[^\n]*|/\*.*?\*/|([{}()\[\]|,;]|(?:[^\s{}()\[\]|,;/]|/(?![/*]))+)", re.S)
_PUNCT = frozenset("{}()[]|,;")


class _Parser:
    """Recursive-descent helper over ``(text, offset)`` tokens; line/column
    positions are only computed when reporting an error."""

    def __init__(self, text):
        self.text = text
        self.toks = [(m.group(1), m.start()) for m in _TOKEN_RE.finditer(text) if m.group(1)]
        self.i = 0

    def error(self, message, tok=None):
        pos = tok[1] if tok is not None else len(self.text)
        line = self.text.count("\n", 0, pos) + 1
        col = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return BifSyntaxError(message, line, col)

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def next(self):
        if self.i >= len(self.toks):
            raise self.error("unexpected end of input")
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.next()
        if tok[0] != text:
            raise self.error(f"expected {text!r}, found {tok[0]!r}", tok)
        return tok

    def word(self):
        tok = self.next()
        if tok[0] in _PUNCT:
            raise self.error(f"expected a name, found {tok[0]!r}", tok)
        return tok

    def number(self):
        tok = self.word()
        try:
            return float(tok[0])
        except ValueError:
            raise self.error(f"expected a number, found {tok[0]!r}", tok) from None

    def numbers(self):
        """Comma-separated numbers terminated by ``;``."""
        toks, i = self.toks, self.i
        j = i
        while j < len(toks) and toks[j][0] != ";":
            j += 1
        chunk = toks[i:j]
        if j == len(toks) or not chunk or len(chunk) % 2 == 0 or any(t[0] != "," for t in chunk[1::2]):
            return self.list_of(self.number, ";")
        try:
            values = [float(t[0]) for t in chunk[0::2]]
        except ValueError:
            return self.list_of(self.number, ";")
        self.i = j + 1
        return values

    def skip_property(self):
        while self.next()[0] != ";":
            pass

    def list_of(self, item, close):
        out = [item()]
        while self.peek() == ",":
            self.next()
            out.append(item())
        self.expect(close)
        return out


def parse_bif(text: str) -> BayesNet:
    """Parse discrete BIF text into a :class:`BayesNet`.

    Rows must sum to one within ``1e-6``; accepted rows are renormalized.
    Every parent configuration needs an explicit row.
    """
    p = _Parser(text)
    variables: dict[str, list[str]] = {}
    order: list[str] = []
    blocks: dict[str, tuple[list[str], list]] = {}
    seen_network = False
    while p.peek() is not None:
        tok = p.word()
        if tok[0] == "network":
            if seen_network:
                raise BifSemanticError("duplicate network block")
            seen_network = True
            p.word()
            p.expect("{")
            while p.peek() not in (None, "}"):
                kw = p.word()
                if kw[0] != "property":
                    raise p.error(f"unexpected {kw[0]!r} in network block", kw)
                p.skip_property()
            p.expect("}")
        elif tok[0] == "variable":
            name = p.word()
            if name[0] in variables:
                raise BifSemanticError(f"duplicate variable block {name[0]!r}")
            p.expect("{")
            states = None
            while p.peek() not in (None, "}"):
                kw = p.word()
                if kw[0] == "property":
                    p.skip_property()
                elif kw[0] == "type":
                    t = p.word()
                    if t[0] != "discrete":
                        raise BifSemanticError(f"variable {name[0]!r}: only discrete variables are supported")
                    p.expect("[")
                    k = p.word()
                    p.expect("]")
                    p.expect("{")
                    states = [s[0] for s in p.list_of(p.word, "}")]
                    p.expect(";")
                    if not k[0].isdigit() or int(k[0]) != len(states):
                        raise BifSemanticError(
                            f"variable {name[0]!r}: declared {k[0]} states, listed {len(states)}")
                    if len(set(states)) != len(states):
                        raise BifSemanticError(f"variable {name[0]!r}: duplicate state labels")
                else:
                    raise p.error(f"unexpected {kw[0]!r} in variable block", kw)
            p.expect("}")
            if states is None:
                raise BifSemanticError(f"variable {name[0]!r} has no type declaration")
            variables[name[0]] = states
            order.append(name[0])
        elif tok[0] == "probability":
            p.expect("(")
            child = p.word()[0]
            parents = []
            nxt = p.next()
            if nxt[0] == "|":
                parents = [t[0] for t in p.list_of(p.word, ")")]
            elif nxt[0] != ")":
                raise p.error(f"expected '|' or ')', found {nxt[0]!r}", nxt)
            if child in blocks:
                raise BifSemanticError(f"duplicate probability block for {child!r}")
            p.expect("{")
            entries = []
            while p.peek() not in (None, "}"):
                head = p.next()
                if head[0] == "table":
                    entries.append((None, p.numbers()))
                elif head[0] == "(":
                    cfg = [t[0] for t in p.list_of(p.word, ")")]
                    entries.append((cfg, p.numbers()))
                elif head[0] == "property":
                    p.skip_property()
                else:
                    raise p.error(f"unexpected {head[0]!r} in probability block", head)
            p.expect("}")
            blocks[child] = (parents, entries)
        else:
            raise p.error(f"unexpected {tok[0]!r} at top level", tok)
    return _build(variables, order, blocks)


def _build(variables, order, blocks) -> BayesNet:
    index = {name: i for i, name in enumerate(order)}
    for child, (parents, _) in blocks.items():
        for v in [child, *parents]:
            if v not in variables:
                raise BifSemanticError(f"probability block references unknown variable {v!r}")
        if len(set(parents)) != len(parents) or child in parents:
            raise BifSemanticError(f"probability block for {child!r} repeats a variable")
    missing = [v for v in order if v not in blocks]
    if missing:
        raise BifSemanticError(f"no probability block for {missing}")
    n = len(order)
    if n == 0:
        raise BifSemanticError("network declares no variables")
    adj = np.zeros((n, n), dtype=bool)
    for child, (parents, _) in blocks.items():
        for par in parents:
            adj[index[par], index[child]] = True
    try:
        g = Dag(order, adj)
    except CycleError:
        raise BifSemanticError("parent declarations form a directed cycle") from None

    cpts = []
    for child in order:
        parents, entries = blocks[child]
        r = len(variables[child])
        sorted_parents = sorted(parents, key=index.__getitem__)
        cards = [len(variables[x]) for x in sorted_parents]
        q = int(np.prod(cards, dtype=np.int64))
        table = np.full((q, r), np.nan)
        for cfg, values in entries:
            if len(values) != r:
                raise BifSemanticError(f"{child!r}: row with {len(values)} values, expected {r}")
            if cfg is None:
                if parents:
                    raise BifSemanticError(f"{child!r}: 'table' form with parents is not supported")
                row = 0
            else:
                if len(cfg) != len(parents):
                    raise BifSemanticError(f"{child!r}: configuration {cfg} has wrong arity")
                assignment = {}
                for par, label in zip(parents, cfg):
                    try:
                        assignment[par] = variables[par].index(label)
                    except ValueError:
                        raise BifSemanticError(f"{child!r}: unknown state {label!r} of {par!r}") from None
                row = 0
                for par, card in zip(sorted_parents, cards):
                    row = row * card + assignment[par]
            if not np.isnan(table[row]).all():
                raise BifSemanticError(f"{child!r}: duplicate row for configuration {cfg}")
            vals = np.array(values)
            if (vals < 0).any() or (vals > 1).any():
                raise BifSemanticError(f"{child!r}: probability outside [0, 1] in row {cfg}")
            if abs(vals.sum() - 1.0) > ROW_SUM_TOL:
                raise BifSemanticError(f"{child!r}: row {cfg} sums to {vals.sum():.6g}, not 1")
            table[row] = vals / vals.sum()
        if np.isnan(table).any():
            raise BifSemanticError(f"{child!r}: unspecified parent configurations")
        cpts.append(table)
    return BayesNet(g, tuple(tuple(variables[v]) for v in order), tuple(cpts))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_bif(net: BayesNet, name: str = "unknown") -> str:
    """Serialize a network; ``parse_bif(write_bif(net))`` reproduces it."""
    g = net.graph
    out = [f"network {name} {{", "}"]
    for i, v in enumerate(g.node_names):
        states = ", ".join(net.states[i])
        out += [f"variable {v} {{", f"  type discrete [ {len(net.states[i])} ] {{ {states} }};", "}"]
    for i, v in enumerate(g.node_names):
        parents = g.parents(i)
        t = net.cpts[i]
        if not parents:
            out += [f"probability ( {v} ) {{", "  table " + ", ".join(map(_fmt, t[0])) + ";", "}"]
            continue
        out.append(f"probability ( {v} | {', '.join(g.node_names[p] for p in parents)} ) {{")
        cards = [len(net.states[p]) for p in parents]
        for row, cfg in enumerate(np.ndindex(*cards)):
            labels = ", ".join(net.states[p][k] for p, k in zip(parents, cfg))
            out.append(f"  ({labels}) " + ", ".join(map(_fmt, t[row])) + ";")
        out.append("}")
    return "\n".join(out) + "\n"


# Shipped bnlearn fixtures ----------------------------------------------------

# Node counts of the 14 small bnlearn networks used in the benchmark table.
BNLEARN_NODE_COUNTS = {
    "cancer": 5,
    "earthquake": 5,
    "survey": 6,
    "asia": 8,
    "sachs": 11,
    "child": 20,
    "insurance": 27,
    "water": 32,
    "mildew": 35,
    "alarm": 37,
    "barley": 48,
    "hailfinder": 56,
    "hepar2": 70,
    "win95pts": 76,
}


def _network_dir():
    return resources.files("causalga") / "networks"


def available_networks() -> list[str]:
    return sorted(p.name[: -len(".bif.gz")] for p in _network_dir().iterdir() if p.name.endswith(".bif.gz"))


def network_checksums() -> dict[str, str]:
    sums = {}
    for line in (_network_dir() / "SHA256SUMS").read_text().splitlines():
        digest, fname = line.split()
        sums[fname] = digest
    return sums


def read_network_text(name: str, verify: bool = True) -> str:
    fname = f"{name.lower()}.bif.gz"
    blob = (_network_dir() / fname).read_bytes()
    if verify:
        expected = network_checksums().get(fname)
        if expected != hashlib.sha256(blob).hexdigest():
            raise BifError(f"checksum mismatch for shipped network {name!r}")
    return gzip.decompress(blob).decode("utf-8")


def load_network(name: str) -> BayesNet:
    """Load one of the shipped bnlearn networks by name (e.g. ``"asia"``)."""
    return parse_bif(read_network_text(name))


def read_bif_file(path) -> BayesNet:
    path = str(path)
    if path.endswith(".gz"):
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            return parse_bif(fh.read())
    with open(path, encoding="utf-8") as fh:
        return parse_bif(fh.read())
