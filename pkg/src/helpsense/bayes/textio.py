"""Network file loader and serializer.

The format is line-oriented structured text (see docs/formats.md):

    assistance needs_assistance

    variable expertise {
      kind: profile
      states: novice, experienced, expert
    }

    cpt needs_assistance {
      parents: expertise
      row novice: 0.55, 0.45
      row experienced: 0.30, 0.70
      row expert: 0.12, 0.88
    }

    noisyor pause_after_activity {
      parents: needs_assistance, user_distracted
      leak: 0.03
      cause needs_assistance: 0.70
      cause user_distracted: 0.45
      temporal {
        units: actions
        default: horizon 0, exponential 20
        stale needs_assistance: 0.12
        stale user_distracted: 0.08
      }
    }

CPT rows may appear in any order; they are keyed by parent-state labels and
stored lexicographically. A `temporal` block inside an observation node
carries its aging parameters: `default:` names the decay for every row,
`stale <labels>:` the gone-stale probability per row (per cause for
noisy-OR), and optional `decay <labels>:` lines override the default.
load(save(...)) reproduces the network and specs exactly.
"""

from __future__ import annotations

from ..errors import FormatError
from ..temporal import DecaySpec, TemporalObservationSpec
from .model import CptNode, Network, NoisyOrNode, Variable, parent_configs, config_labels


def _strip(line: str) -> str:
    hash_pos = line.find("#")
    if hash_pos >= 0:
        line = line[:hash_pos]
    return line.strip()


class _Lines:
    def __init__(self, text: str):
        self.raw = text.splitlines()
        self.pos = 0

    def next_content(self) -> tuple[str, int] | None:
        while self.pos < len(self.raw):
            lineno = self.pos + 1
            line = _strip(self.raw[self.pos])
            self.pos += 1
            if line:
                return line, lineno
        return None


def _parse_decay(text: str, units: str, lineno: int) -> DecaySpec:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2 or not parts[0].startswith("horizon"):
        raise FormatError(f"expected 'horizon H, SHAPE [PARAM]', got {text!r}", lineno)
    try:
        horizon = float(parts[0].split()[1])
    except (IndexError, ValueError):
        raise FormatError(f"bad horizon in {text!r}", lineno) from None
    shape_words = parts[1].split()
    shape = shape_words[0]
    parameter = None
    if len(shape_words) > 1:
        try:
            parameter = float(shape_words[1])
        except ValueError:
            raise FormatError(f"bad decay parameter in {text!r}", lineno) from None
    try:
        return DecaySpec(shape=shape, horizon=horizon, parameter=parameter, units=units)
    except ValueError as exc:
        raise FormatError(str(exc), lineno) from None


def _parse_floats(text: str, lineno: int) -> tuple[float, ...]:
    try:
        return tuple(float(tok.strip()) for tok in text.split(","))
    except ValueError:
        raise FormatError(f"bad number list {text!r}", lineno) from None


def _split_header(line: str, lineno: int) -> tuple[str, str]:
    if not line.endswith("{"):
        raise FormatError(f"expected a block header ending in '{{', got {line!r}", lineno)
    words = line[:-1].split()
    if len(words) != 2:
        raise FormatError(f"expected '<type> <name> {{', got {line!r}", lineno)
    return words[0], words[1]


def _key_value(line: str, lineno: int) -> tuple[str, str]:
    key, sep, value = line.partition(":")
    if not sep:
        raise FormatError(f"expected 'key: value', got {line!r}", lineno)
    return key.strip(), value.strip()


class _TemporalBlock:
    def __init__(self):
        self.units: str | None = None
        self.default: str | None = None  # raw decay text, parsed after units known
        self.default_line = 0
        self.stale: dict[str, tuple[float, int]] = {}
        self.decay: dict[str, tuple[str, int]] = {}


def _read_temporal(lines: _Lines) -> _TemporalBlock:
    block = _TemporalBlock()
    while True:
        item = lines.next_content()
        if item is None:
            raise FormatError("unterminated temporal block", len(lines.raw))
        line, lineno = item
        if line == "}":
            return block
        key, value = _key_value(line, lineno)
        words = key.split()
        if key == "units":
            block.units = value
        elif key == "default":
            block.default, block.default_line = value, lineno
        elif words[0] == "stale":
            label = key[len("stale"):].strip()
            try:
                block.stale[label] = (float(value), lineno)
            except ValueError:
                raise FormatError(f"bad stale probability {value!r}", lineno) from None
        elif words[0] == "decay":
            label = key[len("decay"):].strip()
            block.decay[label] = (value, lineno)
        else:
            raise FormatError(f"unknown temporal entry {key!r}", lineno)


def load_network_text(text: str) -> tuple[Network, dict[str, TemporalObservationSpec]]:
    """Parse a network document into (network, temporal specs by variable)."""
    lines = _Lines(text)
    variables: dict[str, Variable] = {}
    raw_nodes: list[dict] = []
    assistance: str | None = None

    while True:
        item = lines.next_content()
        if item is None:
            break
        line, lineno = item
        if line.startswith("assistance "):
            assistance = line.split(None, 1)[1].strip()
            continue
        kind, name = _split_header(line, lineno)
        if kind == "variable":
            spec: dict = {"name": name, "line": lineno}
            while True:
                inner = lines.next_content()
                if inner is None:
                    raise FormatError(f"unterminated variable block {name!r}", lineno)
                body, body_no = inner
                if body == "}":
                    break
                key, value = _key_value(body, body_no)
                if key == "kind":
                    spec["kind"] = value
                elif key == "states":
                    spec["states"] = tuple(s.strip() for s in value.split(","))
                else:
                    raise FormatError(f"unknown variable entry {key!r}", body_no)
            if "states" not in spec:
                raise FormatError(f"variable {name!r} declares no states", lineno)
            if name in variables:
                raise FormatError(f"variable {name!r} declared twice", lineno)
            try:
                variables[name] = Variable(name=name, states=spec["states"], kind=spec.get("kind", "other"))
            except ValueError as exc:
                raise FormatError(str(exc), lineno) from None
        elif kind in ("cpt", "noisyor"):
            node: dict = {"type": kind, "name": name, "line": lineno, "rows": [], "causes": [], "temporal": None, "parents": (), "leak": 0.0}
            while True:
                inner = lines.next_content()
                if inner is None:
                    raise FormatError(f"unterminated {kind} block {name!r}", lineno)
                body, body_no = inner
                if body == "}":
                    break
                if body == "temporal {":
                    node["temporal"] = _read_temporal(lines)
                    continue
                key, value = _key_value(body, body_no)
                words = key.split()
                try:
                    if key == "parents":
                        node["parents"] = tuple(p.strip() for p in value.split(","))
                    elif key == "leak":
                        node["leak"] = float(value)
                    elif words[0] == "row":
                        labels = key[len("row"):].strip()
                        node["rows"].append((labels, _parse_floats(value, body_no), body_no))
                    elif words[0] == "cause":
                        node["causes"].append((key[len("cause"):].strip(), float(value), body_no))
                    else:
                        raise FormatError(f"unknown {kind} entry {key!r}", body_no)
                except ValueError:
                    raise FormatError(f"bad value in {body!r}", body_no) from None
            raw_nodes.append(node)
        else:
            raise FormatError(f"unknown block type {kind!r}", lineno)

    network = Network(variables=variables, nodes={}, assistance=assistance)
    nodes: dict[str, CptNode | NoisyOrNode] = {}
    specs: dict[str, TemporalObservationSpec] = {}
    for raw in raw_nodes:
        built, spec = _build_node(network, raw)
        if built.variable in nodes:
            raise FormatError(f"node {built.variable!r} declared twice", raw["line"])
        nodes[built.variable] = built
        if spec is not None:
            specs[built.variable] = spec
    network = Network(variables=variables, nodes=nodes, assistance=assistance)
    return network, specs


def _build_node(network: Network, raw: dict):
    name, lineno = raw["name"], raw["line"]
    if name not in network.variables:
        raise FormatError(f"node {name!r} has no variable declaration", lineno)
    parents = raw["parents"]
    for p in parents:
        if p not in network.variables:
            raise FormatError(f"node {name!r} references unknown parent {p!r}", lineno)

    if raw["type"] == "noisyor":
        by_cause = {}
        for cause, value, cause_line in raw["causes"]:
            if cause in by_cause:
                raise FormatError(f"duplicate cause {cause!r} in node {name!r}", cause_line)
            by_cause[cause] = value
        if set(by_cause) != set(parents):
            raise FormatError(f"node {name!r} must list exactly one cause per parent", lineno)
        node = NoisyOrNode(
            variable=name,
            parents=parents,
            activation=tuple(by_cause[p] for p in parents),
            leak=raw["leak"],
        )
        spec = _temporal_spec(network, node, raw["temporal"], lineno)
        return node, spec

    labels_order = [
        ", ".join(config_labels(network, parents, config))
        for config in parent_configs(network, parents)
    ]
    by_label = {}
    for labels, values, row_line in raw["rows"]:
        key = ", ".join(s.strip() for s in labels.split(",")) if labels else ""
        if key in by_label:
            raise FormatError(f"duplicate row {labels!r} in node {name!r}", row_line)
        by_label[key] = values
    if set(by_label) != set(labels_order):
        missing = sorted(set(labels_order) - set(by_label))
        extra = sorted(set(by_label) - set(labels_order))
        detail = "; ".join(
            part
            for part in (
                f"missing rows: {missing}" if missing else "",
                f"unknown rows: {extra}" if extra else "",
            )
            if part
        )
        raise FormatError(f"node {name!r} rows do not match parent configurations ({detail})", lineno)
    node = CptNode(variable=name, parents=parents, rows=tuple(by_label[k] for k in labels_order))
    spec = _temporal_spec(network, node, raw["temporal"], lineno, labels_order)
    return node, spec


def _temporal_spec(network, node, block: _TemporalBlock | None, lineno: int, labels_order=None):
    if block is None:
        return None
    name = node.variable
    if network.card(name) != 2:
        raise FormatError(f"temporal node {name!r} must be binary", lineno)
    if block.units is None:
        raise FormatError(f"temporal block in {name!r} needs a units entry", lineno)
    if block.default is None and not block.decay:
        raise FormatError(f"temporal block in {name!r} needs a default decay", lineno)
    default = (
        _parse_decay(block.default, block.units, block.default_line) if block.default else None
    )

    if isinstance(node, NoisyOrNode):
        keys = list(node.parents)
        immediate = node.activation
    else:
        keys = list(labels_order)
        immediate = tuple(row[0] for row in node.rows)

    normalized_stale = {", ".join(s.strip() for s in k.split(",")): v for k, v in block.stale.items()}
    normalized_decay = {", ".join(s.strip() for s in k.split(",")): v for k, v in block.decay.items()}
    for label in list(normalized_stale) + list(normalized_decay):
        if label not in keys:
            raise FormatError(f"temporal block in {name!r} names unknown row {label!r}", lineno)
    stale = []
    decay = []
    for key in keys:
        if key not in normalized_stale:
            raise FormatError(f"temporal block in {name!r} misses a stale value for {key!r}", lineno)
        stale.append(normalized_stale[key][0])
        if key in normalized_decay:
            text, decay_line = normalized_decay[key]
            decay.append(_parse_decay(text, block.units, decay_line))
        else:
            if default is None:
                raise FormatError(f"temporal block in {name!r} misses a decay for {key!r}", lineno)
            decay.append(default)
    try:
        return TemporalObservationSpec(
            variable=name,
            units=block.units,
            immediate=immediate,
            stale=tuple(stale),
            decay=tuple(decay),
            noisy_or=isinstance(node, NoisyOrNode),
            leak=node.leak if isinstance(node, NoisyOrNode) else 0.0,
        )
    except ValueError as exc:
        raise FormatError(str(exc), lineno) from None


def load_network(path: str) -> tuple[Network, dict[str, TemporalObservationSpec]]:
    with open(path, encoding="utf-8") as fh:
        return load_network_text(fh.read())


# --- serialization ----------------------------------------------------------


def _format_decay(spec: DecaySpec) -> str:
    if spec.parameter is None:
        return f"horizon {spec.horizon!r}, {spec.shape}"
    return f"horizon {spec.horizon!r}, {spec.shape} {spec.parameter!r}"


def save_network_text(
    network: Network, specs: dict[str, TemporalObservationSpec] | None = None
) -> str:
    """Canonical document for a network; load(save(x)) == x."""
    specs = specs or {}
    out: list[str] = []
    if network.assistance:
        out.append(f"assistance {network.assistance}")
        out.append("")
    for var in network.variables.values():
        out.append(f"variable {var.name} {{")
        out.append(f"  kind: {var.kind}")
        out.append(f"  states: {', '.join(var.states)}")
        out.append("}")
        out.append("")
    for name, node in network.nodes.items():
        spec = specs.get(name)
        if isinstance(node, NoisyOrNode):
            out.append(f"noisyor {name} {{")
            out.append(f"  parents: {', '.join(node.parents)}")
            out.append(f"  leak: {node.leak!r}")
            for parent, act in zip(node.parents, node.activation):
                out.append(f"  cause {parent}: {act!r}")
            _append_temporal(out, spec, node.parents)
        else:
            out.append(f"cpt {name} {{")
            if node.parents:
                out.append(f"  parents: {', '.join(node.parents)}")
            labels = [
                ", ".join(config_labels(network, node.parents, config))
                for config in parent_configs(network, node.parents)
            ]
            for label, row in zip(labels, node.rows):
                prefix = f"  row {label}:" if label else "  row:"
                out.append(f"{prefix} {', '.join(repr(p) for p in row)}")
            _append_temporal(out, spec, labels)
        out.append("}")
        out.append("")
    return "\n".join(out)


def _append_temporal(out: list[str], spec: TemporalObservationSpec | None, keys) -> None:
    if spec is None:
        return
    out.append("  temporal {")
    out.append(f"    units: {spec.units}")
    out.append(f"    default: {_format_decay(spec.decay[0])}")
    for key, stale in zip(keys, spec.stale):
        out.append(f"    stale {key}: {stale!r}")
    for key, decay in zip(keys, spec.decay):
        if decay != spec.decay[0]:
            out.append(f"    decay {key}: {_format_decay(decay)}")
    out.append("  }")


def save_network(
    path: str, network: Network, specs: dict[str, TemporalObservationSpec] | None = None
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(save_network_text(network, specs))
        fh.write("\n")
