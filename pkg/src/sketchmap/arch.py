"""Architecture descriptions: what primitives a target implements.

An architecture-description file is a YAML document listing, for each
primitive interface the target implements, the concrete module that
realizes it: the module name, how its ports are wired from interface
inputs (via a tiny wiring-expression grammar), which internal data
(LUT memories, DSP mode bits) become solver holes, and how interface
outputs map onto module ports.

``lower_interface`` then answers "give me interface X on this target",
either directly or through the composite rules: a smaller LUT from a
larger one, a larger LUT from two smaller ones plus a 2:1 mux, muxes
from LUTs, a carry chain from per-bit LUT pairs, and a smaller DSP from
a larger one.  Rule chains are bounded at depth 3.

File-format reference
---------------------

::

    name: my-arch              # optional
    implementations:
      - interface: {name: LUT, num_inputs: 4}
        module_name: frac_lut4
        source: {btor2: frac_lut4.btor2}   # or {builtin: lut}
        internal_data: {sram: 16}
        ports:
          - {name: in,   direction: in,  width: 4,
             value: (concat I3 I2 I1 I0)}
          - {name: mode, direction: in,  width: 1, value: (bv 0 1)}
          - {name: out,  direction: out, width: 1}
        parameters:
          - {name: sram, value: sram}
        outputs: {O: out}       # LUT output key "0" also accepted
        constraints: []          # optional width-1 expressions

Value expressions: an interface input name, an internal_data name,
``(bv value width)``, ``(concat e ...)`` (first argument is the high
part), or ``(extract hi lo e)``.  A port named ``clk`` takes no value:
it is wired to the global clock at emission.  Unknown keys anywhere are
errors — the schema is strict.
"""

import os
from dataclasses import dataclass, field

from .ir import (
    BV, BitVec, ConstantHole, EmitMeta, Hole, Id, Op, Operator,
    PortBinding, Prim, Prog, ProgBuilder, Reg, SketchmapError, Var,
)
from .primitives import (
    PrimitiveInterface, PrimitiveModel, builtin_model, carry_interface,
    dsp_interface, lut_interface, mux_interface, output_slice,
)

__all__ = [
    "SchemaError", "UnknownInterface", "ModelLoadError", "WidthMismatch",
    "NoImplementation", "PortSpec", "InterfaceImpl", "ArchDescription",
    "parse_arch", "load_arch", "instantiate", "lower_interface",
    "HoleNamer", "BuildResult", "packaged_arch_path",
]


class SchemaError(SketchmapError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class UnknownInterface(SketchmapError):
    pass


class ModelLoadError(SketchmapError):
    pass


class WidthMismatch(SketchmapError):
    pass


class NoImplementation(SketchmapError):
    def __init__(self, requested: PrimitiveInterface):
        super().__init__(
            f"no implementation chain reaches {requested.name} "
            f"{dict(requested.params)}")
        self.requested = requested


# -- wiring-expression grammar ------------------------------------------------

def parse_value_expr(text: str, path: str):
    """One expression: var | (bv v w) | (concat e ...) | (extract hi lo e)."""
    from .solver.qfbv import SolverInputError, parse_all

    try:
        exprs = parse_all(text)
    except SolverInputError as e:
        raise SchemaError(path, f"bad expression syntax: {e}")
    if len(exprs) != 1:
        raise SchemaError(path, "expected exactly one expression")

    def conv(e):
        if isinstance(e, str):
            if e[0].isdigit() or e[0] == "-":
                raise SchemaError(path, f"bare number {e!r}; use (bv v w)")
            return ("var", e)
        if not e:
            raise SchemaError(path, "empty expression")
        head = e[0]
        if head == "bv":
            if len(e) != 3:
                raise SchemaError(path, "(bv value width) takes 2 numbers")
            try:
                return ("bv", int(e[1]), int(e[2]))
            except (ValueError, TypeError):
                raise SchemaError(path, f"bad bv literal {e!r}")
        if head == "concat":
            if len(e) < 3:
                raise SchemaError(path, "concat needs >= 2 operands")
            parts = [conv(x) for x in e[1:]]
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = ("concat", p, out)
            return out
        if head == "extract":
            if len(e) != 4:
                raise SchemaError(path, "(extract hi lo e)")
            try:
                hi, lo = int(e[1]), int(e[2])
            except (ValueError, TypeError):
                raise SchemaError(path, f"bad extract bounds in {e!r}")
            return ("extract", hi, lo, conv(e[3]))
        raise SchemaError(path, f"unknown expression head {head!r}")

    return conv(exprs[0])


def expr_width(expr, widths: dict[str, int], path: str) -> int:
    tag = expr[0]
    if tag == "var":
        if expr[1] not in widths:
            raise SchemaError(path, f"unknown name {expr[1]!r}")
        return widths[expr[1]]
    if tag == "bv":
        if expr[2] <= 0:
            raise SchemaError(path, "bv width must be positive")
        return expr[2]
    if tag == "concat":
        return (expr_width(expr[1], widths, path)
                + expr_width(expr[2], widths, path))
    hi, lo = expr[1], expr[2]
    inner = expr_width(expr[3], widths, path)
    if not 0 <= lo <= hi < inner:
        raise SchemaError(path, f"extract [{hi}:{lo}] out of range for "
                          f"width {inner}")
    return hi - lo + 1


def expr_vars(expr) -> set[str]:
    tag = expr[0]
    if tag == "var":
        return {expr[1]}
    if tag == "bv":
        return set()
    if tag == "concat":
        return expr_vars(expr[1]) | expr_vars(expr[2])
    return expr_vars(expr[3])


def build_expr(b: ProgBuilder, expr, env: dict[str, Id]) -> Id:
    tag = expr[0]
    if tag == "var":
        return env[expr[1]]
    if tag == "bv":
        return b.bv(expr[1], expr[2])
    if tag == "concat":
        return b.concat(build_expr(b, expr[1], env),
                        build_expr(b, expr[2], env))
    return b.extract(expr[1], expr[2], build_expr(b, expr[3], env))


def rename_expr(expr, mapping: dict[str, str]):
    """var renaming, used to prefix hole labels in constraints."""
    tag = expr[0]
    if tag == "var":
        return ("hole", mapping[expr[1]])
    if tag == "bv":
        return expr
    if tag == "concat":
        return ("concat", rename_expr(expr[1], mapping),
                rename_expr(expr[2], mapping))
    return ("extract", expr[1], expr[2], rename_expr(expr[3], mapping))


# -- schema -------------------------------------------------------------------

@dataclass(frozen=True)
class PortSpec:
    name: str
    direction: str           # "in" | "out"
    width: int
    value: object = None     # parsed expression; None for outputs / clk


@dataclass(frozen=True)
class InterfaceImpl:
    interface: PrimitiveInterface
    module_name: str
    source: tuple[str, str]             # ("builtin", family) | ("btor2", path)
    internal_data: tuple[tuple[str, int], ...]
    ports: tuple[PortSpec, ...]
    parameters: tuple[tuple[str, object], ...]   # (name, expr)
    outputs: tuple[tuple[str, str], ...]         # iface output -> module port
    constraints: tuple[object, ...]

    @property
    def internal_map(self) -> dict[str, int]:
        return dict(self.internal_data)

    def port(self, name: str) -> PortSpec:
        for p in self.ports:
            if p.name == name:
                return p
        raise SketchmapError(f"{self.module_name} has no port {name!r}")


@dataclass(frozen=True)
class ArchDescription:
    name: str
    implementations: tuple[InterfaceImpl, ...]
    base_dir: str = "."

    def find(self, iface: PrimitiveInterface) -> InterfaceImpl | None:
        for impl in self.implementations:
            if impl.interface == iface:
                return impl
        return None

    def find_family(self, name: str) -> list[InterfaceImpl]:
        return [i for i in self.implementations if i.interface.name == name]

    def find_module(self, module_name: str) -> InterfaceImpl | None:
        for impl in self.implementations:
            if impl.module_name == module_name:
                return impl
        return None


_IFACE_PARAM_KEYS = {"LUT": ("num_inputs",), "MUX": ("num_inputs",),
                     "CARRY": ("width",), "DSP": ("width",)}
_IFACE_MAKERS = {"LUT": lut_interface, "MUX": mux_interface,
                 "CARRY": carry_interface, "DSP": dsp_interface}


def _expect_map(v, path: str) -> dict:
    if not isinstance(v, dict):
        raise SchemaError(path, f"expected a mapping, got {type(v).__name__}")
    return v


def _expect_keys(m: dict, path: str, required: tuple, optional: tuple = ()):
    for k in required:
        if k not in m:
            raise SchemaError(path, f"missing required key {k!r}")
    for k in m:
        if k not in required and k not in optional:
            raise SchemaError(path, f"unknown key {k!r}")


def _pos_int(v, path: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool) or v <= 0:
        raise SchemaError(path, f"expected a positive integer, got {v!r}")
    return v


def _parse_interface(m, path: str) -> PrimitiveInterface:
    m = _expect_map(m, path)
    if "name" not in m:
        raise SchemaError(path, "interface needs a name")
    name = m["name"]
    if name not in _IFACE_MAKERS:
        raise UnknownInterface(f"{path}: unknown interface {name!r}")
    keys = _IFACE_PARAM_KEYS[name]
    _expect_keys(m, path, ("name",) + keys)
    try:
        return _IFACE_MAKERS[name](_pos_int(m[keys[0]], path))
    except SketchmapError as e:
        if isinstance(e, SchemaError):
            raise
        raise SchemaError(path, str(e))


def _parse_impl(m, path: str) -> InterfaceImpl:
    m = _expect_map(m, path)
    _expect_keys(m, path,
                 ("interface", "module_name", "source", "ports", "outputs"),
                 ("internal_data", "parameters", "constraints"))
    iface = _parse_interface(m["interface"], f"{path}.interface")
    if not isinstance(m["module_name"], str) or not m["module_name"]:
        raise SchemaError(f"{path}.module_name", "must be a nonempty string")

    src = _expect_map(m["source"], f"{path}.source")
    if len(src) != 1 or next(iter(src)) not in ("builtin", "btor2"):
        raise SchemaError(f"{path}.source",
                          "expected exactly one of builtin:/btor2:")
    ((src_kind, src_val),) = src.items()
    if not isinstance(src_val, str):
        raise SchemaError(f"{path}.source", "source value must be a string")

    internal: list[tuple[str, int]] = []
    for k, v in _expect_map(m.get("internal_data", {}),
                            f"{path}.internal_data").items():
        internal.append((str(k), _pos_int(v, f"{path}.internal_data.{k}")))

    iface_in = dict(iface.inputs)
    widths = dict(iface_in)
    for k, w in internal:
        if k in widths:
            raise SchemaError(f"{path}.internal_data.{k}",
                              "name collides with an interface input")
        widths[k] = w

    ports: list[PortSpec] = []
    raw_ports = m["ports"]
    if not isinstance(raw_ports, list) or not raw_ports:
        raise SchemaError(f"{path}.ports", "expected a nonempty list")
    for i, pm in enumerate(raw_ports):
        ppath = f"{path}.ports[{i}]"
        pm = _expect_map(pm, ppath)
        _expect_keys(pm, ppath, ("name", "direction", "width"), ("value",))
        pname = str(pm["name"])
        pdir = pm["direction"]
        if pdir not in ("in", "out"):
            raise SchemaError(ppath, f"direction must be in/out, got {pdir!r}")
        pw = _pos_int(pm["width"], f"{ppath}.width")
        value = None
        if pdir == "in" and pname != "clk":
            if "value" not in pm:
                raise SchemaError(ppath, "input ports need a value")
            value = parse_value_expr(str(pm["value"]), f"{ppath}.value")
            got = expr_width(value, widths, f"{ppath}.value")
            if got != pw:
                raise WidthMismatch(
                    f"{ppath}: port {pname!r} is {pw} bits but its value "
                    f"expression is {got} bits")
        elif "value" in pm:
            raise SchemaError(ppath, f"{pname!r} must not carry a value")
        if pname == "clk" and (pdir, pw) != ("in", 1):
            raise SchemaError(ppath, "clk must be a 1-bit input")
        if any(p.name == pname for p in ports):
            raise SchemaError(ppath, f"duplicate port {pname!r}")
        ports.append(PortSpec(pname, pdir, pw, value))

    params: list[tuple[str, object]] = []
    for i, pm in enumerate(m.get("parameters", ())):
        ppath = f"{path}.parameters[{i}]"
        pm = _expect_map(pm, ppath)
        _expect_keys(pm, ppath, ("name", "value"))
        expr = parse_value_expr(str(pm["value"]), f"{ppath}.value")
        for nm in expr_vars(expr):
            if nm not in dict(internal):
                raise SchemaError(
                    f"{ppath}.value",
                    f"parameters may only reference internal_data, "
                    f"not {nm!r}")
        expr_width(expr, widths, f"{ppath}.value")
        params.append((str(pm["name"]), expr))

    outputs: list[tuple[str, str]] = []
    iface_out = dict(iface.outputs)
    canon_first = iface.outputs[0][0]
    for k, v in _expect_map(m["outputs"], f"{path}.outputs").items():
        key = str(k)
        if key == "0":       # digit-zero spelling of the primary output
            key = canon_first
        if key not in iface_out:
            raise SchemaError(f"{path}.outputs",
                              f"{key!r} is not an output of {iface.name}")
        port = next((p for p in ports if p.name == str(v)), None)
        if port is None or port.direction != "out":
            raise SchemaError(f"{path}.outputs",
                              f"{v!r} is not a declared output port")
        if port.width != iface_out[key]:
            raise WidthMismatch(
                f"{path}.outputs: {key} is {iface_out[key]} bits but "
                f"port {port.name!r} is {port.width}")
        outputs.append((key, str(v)))
    if len(outputs) != len(iface_out) or \
            len({k for k, _ in outputs}) != len(outputs):
        raise SchemaError(f"{path}.outputs",
                          f"must map each of {sorted(iface_out)} exactly "
                          "once")

    constraints = []
    for i, c in enumerate(m.get("constraints", ())):
        cpath = f"{path}.constraints[{i}]"
        expr = parse_value_expr(str(c), cpath)
        names = expr_vars(expr)
        bad = names - set(dict(internal))
        if bad:
            raise SchemaError(cpath, "constraints may only reference "
                              f"internal_data, not {sorted(bad)}")
        if expr_width(expr, widths, cpath) != 1:
            raise SchemaError(cpath, "constraints must be 1 bit wide")
        constraints.append(expr)

    # every interface input must feed some port value expression
    consumed = set()
    for p in ports:
        if p.value is not None:
            consumed |= expr_vars(p.value)
    missing = {n for n in iface_in if n != "clk"} - consumed
    if missing:
        raise SchemaError(f"{path}.ports",
                          f"interface inputs never consumed: "
                          f"{sorted(missing)}")

    return InterfaceImpl(
        interface=iface, module_name=m["module_name"],
        source=(src_kind, src_val), internal_data=tuple(internal),
        ports=tuple(ports), parameters=tuple(params),
        outputs=tuple(outputs), constraints=tuple(constraints))


def parse_arch(text: str, name: str = "arch",
               base_dir: str = ".") -> ArchDescription:
    import yaml

    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise SchemaError("document", f"not valid YAML: {e}")
    doc = _expect_map(doc, "document")
    _expect_keys(doc, "document", ("implementations",), ("name",))
    if "name" in doc:
        name = str(doc["name"])
    raw = doc["implementations"]
    if not isinstance(raw, list) or not raw:
        raise SchemaError("implementations", "expected a nonempty list")
    impls = tuple(_parse_impl(m, f"implementations[{i}]")
                  for i, m in enumerate(raw))
    seen = set()
    for i, impl in enumerate(impls):
        key = (impl.interface.name, impl.interface.params)
        if key in seen:
            raise SchemaError(f"implementations[{i}]",
                              f"duplicate implementation of "
                              f"{impl.interface.name} "
                              f"{dict(impl.interface.params)}")
        seen.add(key)
    return ArchDescription(name, impls, base_dir)


def load_arch(path: str) -> ArchDescription:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    base = os.path.dirname(os.path.abspath(path))
    name = os.path.basename(path).rsplit(".", 1)[0]
    return parse_arch(text, name, base)


def packaged_arch_path(name: str) -> str:
    """Absolute path of a description shipped with the package."""
    here = os.path.dirname(os.path.abspath(__file__))
    return os.path.join(here, "archfiles", name)


# -- model loading ------------------------------------------------------------

def _load_model(impl: InterfaceImpl, arch: ArchDescription
                ) -> tuple[Prog, dict[str, int], tuple[tuple[str, int], ...]]:
    """(semantics, free-var widths, packed outputs MSB-first)."""
    kind, val = impl.source
    if kind == "builtin":
        try:
            model = builtin_model(val, impl.interface.param_map)
        except SketchmapError as e:
            raise ModelLoadError(f"{impl.module_name}: {e}")
        fvw = {n: w for n, (d, w) in model.port_map.items()
               if d == "in" and n != "clk"}
        fvw.update(model.internal_map)
        return model.semantics, fvw, model.outputs
    from .btor2 import load_btor2
    path = os.path.join(arch.base_dir, val)
    try:
        imported = load_btor2(path)
    except OSError as e:
        raise ModelLoadError(f"{impl.module_name}: cannot read {path}: {e}")
    except SketchmapError as e:
        raise ModelLoadError(f"{impl.module_name}: {path}: {e}")
    root_w = _prog_root_width(imported.semantics)
    if len(impl.outputs) != 1:
        raise ModelLoadError(
            f"{impl.module_name}: btor2-backed implementations support "
            "exactly one output")
    return imported.semantics, dict(imported.inputs), \
        ((impl.outputs[0][0], root_w),)


def _prog_root_width(p: Prog) -> int:
    from .ir import node_widths
    return node_widths(p)[p.root]


def _relabel(prog: Prog, nb: ProgBuilder) -> Prog:
    """Copy a program onto fresh node ids from nb's shared counter."""
    mapping: dict[Id, Id] = {}
    child = nb.child()
    for i in prog.nodes:
        mapping[i] = child.fresh()

    def remap_node(n):
        if isinstance(n, (BV, Var)):
            return n
        if isinstance(n, Op):
            return Op(n.op, tuple(mapping[a] for a in n.args))
        if isinstance(n, Reg):
            return Reg(mapping[n.data], n.init)
        if isinstance(n, Prim):
            return Prim(tuple((k, mapping[v]) for k, v in n.binds),
                        _relabel(n.body, nb), n.meta)
        if isinstance(n, Hole):
            return n
        raise SketchmapError(f"cannot relabel {type(n).__name__}")

    nodes = {mapping[i]: remap_node(n) for i, n in prog.nodes.items()}
    return Prog(mapping[prog.root], nodes)


# -- instantiation ------------------------------------------------------------

class HoleNamer:
    """Allocates unique hole-label prefixes, one per primitive instance."""

    def __init__(self, stem: str = "u"):
        self.stem = stem
        self.count = 0

    def prefix(self) -> str:
        p = f"{self.stem}{self.count}_"
        self.count += 1
        return p


@dataclass
class BuildResult:
    outputs: dict[str, Id]                 # interface output -> node id
    holes: dict[str, ConstantHole] = field(default_factory=dict)
    constraints: list = field(default_factory=list)


def instantiate(impl: InterfaceImpl, b: ProgBuilder,
                inputs: dict[str, Id], namer: HoleNamer,
                arch: ArchDescription,
                pinned: dict[str, BitVec] | None = None) -> BuildResult:
    """Wire one concrete primitive instance into the program under b.

    inputs maps interface input names to existing node ids.  Each
    internal_data entry becomes a fresh ConstantHole unless `pinned`
    supplies a constant for it.  Returns the interface outputs (extract
    nodes over the packed primitive value when there are several).
    """
    semantics, fvw, packed = _load_model(impl, arch)
    pinned = pinned or {}
    iface_in = {n for n, _ in impl.interface.inputs}
    extra = set(inputs) - iface_in
    if extra:
        raise SketchmapError(f"unexpected interface inputs {sorted(extra)}")
    absent = {n for n in iface_in if n != "clk"} - set(inputs)
    if absent:
        raise SketchmapError(
            f"interface inputs not supplied: {sorted(absent)}")

    prefix = namer.prefix()
    holes: dict[str, ConstantHole] = {}
    env: dict[str, Id] = dict(inputs)
    for nm, w in impl.internal_data:
        if nm not in fvw:
            raise ModelLoadError(
                f"{impl.module_name}: internal_data {nm!r} is not a free "
                "variable of the model")
        if fvw[nm] != w:
            raise WidthMismatch(
                f"{impl.module_name}: internal_data {nm!r} declared "
                f"{w} bits but the model reads {fvw[nm]}")
        if nm in pinned:
            if pinned[nm].width != w:
                raise WidthMismatch(
                    f"{impl.module_name}: pinned {nm!r} has width "
                    f"{pinned[nm].width}, expected {w}")
            env[nm] = b.bv(pinned[nm].value, w)
        else:
            spec = ConstantHole(w)
            holes[prefix + nm] = spec
            env[nm] = b.hole(prefix + nm, spec)

    port_values: dict[str, Id] = {}
    for p in impl.ports:
        if p.direction == "in" and p.name != "clk":
            port_values[p.name] = build_expr(b, p.value, env)

    prim, outputs = _assemble_prim(impl, b, semantics, fvw, packed,
                                   port_values,
                                   {nm: env[nm] for nm, _ in
                                    impl.internal_data})
    constraints = [rename_expr(c, {nm: prefix + nm
                                   for nm, _ in impl.internal_data})
                   for c in impl.constraints]
    return BuildResult(outputs, holes, constraints)


def _assemble_prim(impl: InterfaceImpl, b: ProgBuilder, semantics, fvw,
                   packed, port_values: dict[str, Id],
                   internal_ids: dict[str, Id]) -> tuple[Id, dict[str, Id]]:
    """Create the Prim node: binds, emission metadata, output extracts.

    port_values maps module (not interface) input port names to ids;
    internal_ids maps internal_data names to ids (holes or constants).
    Returns the prim id and the interface-output map.
    """
    binds: list[tuple[str, Id]] = []
    port_bindings: list[tuple[str, PortBinding]] = []
    for p in impl.ports:
        if p.direction != "in":
            continue
        if p.name == "clk":
            port_bindings.append(("clk", PortBinding("clk", "in", 1)))
            continue
        if p.name not in fvw:
            raise ModelLoadError(
                f"{impl.module_name}: port {p.name!r} is not an input of "
                "the model")
        if fvw[p.name] != p.width:
            raise WidthMismatch(
                f"{impl.module_name}: port {p.name!r} declared {p.width} "
                f"bits but the model reads {fvw[p.name]}")
        binds.append((p.name, port_values[p.name]))
        port_bindings.append((p.name, PortBinding(p.name, "in", p.width)))

    for nm, _ in impl.internal_data:
        binds.append((nm, internal_ids[nm]))

    unwired = set(fvw) - {k for k, _ in binds}
    if unwired:
        raise ModelLoadError(
            f"{impl.module_name}: model inputs never wired: "
            f"{sorted(unwired)}")

    param_bindings: list[tuple[str, object]] = []
    for pname, expr in impl.parameters:
        if expr[0] == "var":
            param_bindings.append((pname, expr[1]))
        elif expr[0] == "bv":
            param_bindings.append((pname, BitVec.of(expr[1], expr[2])))
        else:
            raise SchemaError(
                f"{impl.module_name}.parameters.{pname}",
                "parameter values must be a name or (bv v w)")

    out_map = dict(impl.outputs)
    slices = []
    lo = 0
    for oname, ow in reversed(packed):
        slices.append((out_map[oname], lo + ow - 1, lo))
        lo += ow
    slices.reverse()
    meta = EmitMeta(
        module_name=impl.module_name,
        port_bindings=tuple(port_bindings),
        parameter_bindings=tuple(param_bindings),
        output_port=out_map[packed[-1][0]],
        output_slices=tuple(slices) if len(packed) > 1 else ())

    body = _relabel(semantics, b)
    prim = b.add(Prim(tuple(binds), body, meta))
    outputs: dict[str, Id] = {}
    if len(packed) == 1:
        outputs[packed[0][0]] = prim
    else:
        lo = 0
        for oname, ow in reversed(packed):
            outputs[oname] = b.extract(lo + ow - 1, lo, prim)
            lo += ow
    return prim, outputs


def instantiate_from_ports(impl: InterfaceImpl, b: ProgBuilder,
                           port_values: dict[str, Id],
                           internals: dict[str, BitVec],
                           arch: "ArchDescription"):
    """Rebuild a concrete instance from module-level port values.

    The netlist importer's entry point: port_values are keyed by module
    port names (the interface-level port expressions have already been
    flattened to wires), and every internal_data entry must be pinned to
    a constant.  Returns (prim id, interface-output ids, packed output
    layout) where the layout lists (interface output, width) in packing
    order, MSB first.
    """
    semantics, fvw, packed = _load_model(impl, arch)
    internal_ids: dict[str, Id] = {}
    for nm, w in impl.internal_data:
        if nm not in internals:
            raise ModelLoadError(
                f"{impl.module_name}: no value for internal data {nm!r}")
        if internals[nm].width != w:
            raise WidthMismatch(
                f"{impl.module_name}: internal {nm!r} has width "
                f"{internals[nm].width}, expected {w}")
        internal_ids[nm] = b.bv(internals[nm].value, w)
    expected = {p.name for p in impl.ports
                if p.direction == "in" and p.name != "clk"}
    if set(port_values) != expected:
        raise SketchmapError(
            f"{impl.module_name}: ports {sorted(port_values)} do not "
            f"match the module inputs {sorted(expected)}")
    prim, outputs = _assemble_prim(impl, b, semantics, fvw, packed,
                                   port_values, internal_ids)
    return prim, outputs, packed


# -- lowering plans -----------------------------------------------------------

_MUX_TABLE = 0xCA      # LUT3(I0=a, I1=b, I2=s): out = s ? b : a
_XOR2_TABLE = 0b0110   # LUT2: out = I0 xor I1
_MUXLO_TABLE = 0b0010  # LUT2(I0=a, I1=s): out = a and not s
_MUXHI_TABLE = 0b1000  # LUT2(I0=b, I1=s): out = b and s
_OR2_TABLE = 0b1110    # LUT2: out = I0 or I1


def _merge(dst: BuildResult, src: BuildResult) -> None:
    dst.holes.update(src.holes)
    dst.constraints.extend(src.constraints)


@dataclass(frozen=True)
class Direct:
    impl: InterfaceImpl
    interface: PrimitiveInterface

    def build(self, b, inputs, namer, arch, pin_table=None) -> BuildResult:
        pinned = None
        if pin_table is not None:
            ((nm, w),) = self.impl.internal_data
            pinned = {nm: BitVec.of(pin_table, w)}
        return instantiate(self.impl, b, inputs, namer, arch, pinned)


@dataclass(frozen=True)
class LutFromLarger:
    """LUT(n) via LUT(m > n): tie the m-n high inputs to constant 0."""
    child: object
    interface: PrimitiveInterface

    def build(self, b, inputs, namer, arch, pin_table=None) -> BuildResult:
        n = self.interface.param_map["num_inputs"]
        m = self.child.interface.param_map["num_inputs"]
        wide = dict(inputs)
        for j in range(n, m):
            wide[f"I{j}"] = b.bv(0, 1)
        # high index patterns are unreachable, so the table carries over
        return self.child.build(b, wide, namer, arch, pin_table)


@dataclass(frozen=True)
class LutFromSmaller:
    """LUT(n) via two LUT(n-1) halves selected by I{n-1} through a mux."""
    half: object          # plan for LUT(n-1)
    mux: object           # plan for MUX(2)
    interface: PrimitiveInterface

    def build(self, b, inputs, namer, arch, pin_table=None) -> BuildResult:
        n = self.interface.param_map["num_inputs"]
        low_in = {f"I{j}": inputs[f"I{j}"] for j in range(n - 1)}
        half_bits = 2 ** (n - 1)
        mask = (1 << half_bits) - 1
        t0 = t1 = None
        if pin_table is not None:
            t0, t1 = pin_table & mask, (pin_table >> half_bits) & mask
        r0 = self.half.build(b, dict(low_in), namer, arch, t0)
        r1 = self.half.build(b, dict(low_in), namer, arch, t1)
        rm = self.mux.build(
            b, {"I0": r0.outputs["O"], "I1": r1.outputs["O"],
                "S0": inputs[f"I{n-1}"]}, namer, arch, None)
        for r in (r0, r1):
            _merge(rm, r)
        return BuildResult(rm.outputs, rm.holes, rm.constraints)


@dataclass(frozen=True)
class MuxFromLut:
    """MUX(2) as a pinned 3-input LUT (table 0xCA)."""
    lut3: object
    interface: PrimitiveInterface

    def build(self, b, inputs, namer, arch, pin_table=None) -> BuildResult:
        assert pin_table is None
        return self.lut3.build(
            b, {"I0": inputs["I0"], "I1": inputs["I1"],
                "I2": inputs["S0"]}, namer, arch, _MUX_TABLE)


@dataclass(frozen=True)
class MuxFromLutPair:
    """MUX(2) as a tree of three pinned 2-input LUTs.

    Used when the fabric has no LUT wide enough to absorb both data
    inputs and the select in one level: (a and not s) or (b and s).
    """
    lut2: object
    interface: PrimitiveInterface

    def build(self, b, inputs, namer, arch, pin_table=None) -> BuildResult:
        assert pin_table is None
        lo = self.lut2.build(b, {"I0": inputs["I0"], "I1": inputs["S0"]},
                             namer, arch, _MUXLO_TABLE)
        hi = self.lut2.build(b, {"I0": inputs["I1"], "I1": inputs["S0"]},
                             namer, arch, _MUXHI_TABLE)
        r = self.lut2.build(b, {"I0": lo.outputs["O"],
                                "I1": hi.outputs["O"]}, namer, arch,
                            _OR2_TABLE)
        for part in (lo, hi):
            _merge(r, part)
        return BuildResult(r.outputs, r.holes, r.constraints)


@dataclass(frozen=True)
class MuxTree:
    """MUX(n) as a tree of MUX(2) plans, selects applied LSB first."""
    mux2: object
    interface: PrimitiveInterface

    def build(self, b, inputs, namer, arch, pin_table=None) -> BuildResult:
        assert pin_table is None
        n = self.interface.param_map["num_inputs"]
        k = n.bit_length() - 1
        layer = [inputs[f"I{i}"] for i in range(n)]
        out = BuildResult({})
        for j in range(k):
            nxt = []
            for i in range(len(layer) // 2):
                r = self.mux2.build(
                    b, {"I0": layer[2 * i], "I1": layer[2 * i + 1],
                        "S0": inputs[f"S{j}"]}, namer, arch, None)
                _merge(out, r)
                nxt.append(r.outputs["O"])
            layer = nxt
        out.outputs = {"O": layer[0]}
        return out


@dataclass(frozen=True)
class CarryFromLuts:
    """CARRY(w) as per-bit pinned LUT pairs: sum = S_i xor c_i and
    c_{i+1} = S_i ? c_i : DI_i."""
    lut2: object
    lut3: object
    interface: PrimitiveInterface

    def build(self, b, inputs, namer, arch, pin_table=None) -> BuildResult:
        assert pin_table is None
        w = self.interface.param_map["width"]
        out = BuildResult({})
        c = inputs["CI"]
        bits = []
        for i in range(w):
            si = b.extract(i, i, inputs["S"])
            di = b.extract(i, i, inputs["DI"])
            rs = self.lut2.build(b, {"I0": si, "I1": c}, namer, arch,
                                 _XOR2_TABLE)
            _merge(out, rs)
            bits.append(rs.outputs["O"])
            # c' = si ? c : di  ==  mux(a=di, b=c, s=si)
            rc = self.lut3.build(b, {"I0": di, "I1": c, "I2": si},
                                 namer, arch, _MUX_TABLE)
            _merge(out, rc)
            c = rc.outputs["O"]
        out.outputs = {"O": b.concat_all(list(reversed(bits))), "CO": c}
        return out


@dataclass(frozen=True)
class DspFromLarger:
    """DSP(w) via DSP(W > w): zero-extend inputs, take the low w bits."""
    child: object
    interface: PrimitiveInterface

    def build(self, b, inputs, namer, arch, pin_table=None) -> BuildResult:
        assert pin_table is None
        w = self.interface.param_map["width"]
        big = self.child.interface.param_map["width"]
        wide = {n: b.zext(big - w, i) for n, i in inputs.items()}
        r = self.child.build(b, wide, namer, arch, None)
        r.outputs = {"out": b.extract(w - 1, 0, r.outputs["out"])}
        return r


def lower_interface(requested: PrimitiveInterface, desc: ArchDescription,
                    depth: int = 3):
    """A plan realizing the requested interface on this architecture."""
    impl = desc.find(requested)
    if impl is not None:
        return Direct(impl, requested)
    if depth <= 0:
        raise NoImplementation(requested)
    name = requested.name
    if name == "LUT":
        n = requested.param_map["num_inputs"]
        sizes = sorted(i.interface.param_map["num_inputs"]
                       for i in desc.find_family("LUT"))
        larger = [m for m in sizes if m > n]
        if larger:
            child = lower_interface(lut_interface(larger[0]), desc,
                                    depth - 1)
            return LutFromLarger(child, requested)
        if sizes and n > 1:
            half = lower_interface(lut_interface(n - 1), desc, depth - 1)
            mux = lower_interface(mux_interface(2), desc, depth - 1)
            return LutFromSmaller(half, mux, requested)
        raise NoImplementation(requested)
    if name == "MUX":
        n = requested.param_map["num_inputs"]
        if n == 2:
            try:
                lut3 = lower_interface(lut_interface(3), desc, depth - 1)
                return MuxFromLut(lut3, requested)
            except NoImplementation:
                lut2 = lower_interface(lut_interface(2), desc, depth - 1)
                return MuxFromLutPair(lut2, requested)
        mux2 = lower_interface(mux_interface(2), desc, depth - 1)
        return MuxTree(mux2, requested)
    if name == "CARRY":
        lut2 = lower_interface(lut_interface(2), desc, depth - 1)
        lut3 = lower_interface(lut_interface(3), desc, depth - 1)
        return CarryFromLuts(lut2, lut3, requested)
    if name == "DSP":
        w = requested.param_map["width"]
        sizes = sorted(i.interface.param_map["width"]
                       for i in desc.find_family("DSP"))
        larger = [x for x in sizes if x > w]
        if larger:
            child = lower_interface(dsp_interface(larger[0]), desc,
                                    depth - 1)
            return DspFromLarger(child, requested)
        raise NoImplementation(requested)
    raise NoImplementation(requested)
