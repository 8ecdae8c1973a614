"""JSON persistence (schema "v1").

Every object is written as {"type": name, ...} with exact strings for all
numbers; ``dumps`` sorts keys so equal workspaces give identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .agmeasures import (
    AGFunction,
    AlmostGaussianMeasure,
    DeskDistribution,
    HeisenbergOp,
)
from .derham import AGForm, ComplexOfSpaces, DeRhamFamily, OrientedForm
from .errors import SchemaError
from .lattice import (
    ComplexOrientation,
    DetTheory,
    DimensionTheory,
    GLElement,
    HaarTheory,
    LatticeSubspace,
    OrientationTheory,
    WindowSpace,
    theory_from_json,
    theory_to_json,
)
from .linalg import FinVec, LinMap, fmt_fraction
from .polynomial import Polynomial, coeff_from_str, coeff_to_str
from .promeasures import CoherentMeasureFamily, DistributionGerm, QuadraticTheory
from .quadforms import PosDefForm, SymBilForm, form_from_json, form_to_json
from .report import Report
from .scalar import Scalar
from .superalg import ExteriorElement, SuperMeasure, SuperVec, WedgeVector

SCHEMA = "v1"


def _poly(p: Polynomial) -> dict:
    return {"space": p.space.to_json(), "terms": p.to_json()}


def _unpoly(d) -> Polynomial:
    return Polynomial.from_json(FinVec.from_json(d["space"]), d["terms"])


def _key(u) -> list:
    return sorted(u)


def _pair_entries(entries: dict, enc) -> list:
    rows = [{"U": _key(u), "U'": _key(up), "entry": enc(v)} for (u, up), v in entries.items()]
    return sorted(rows, key=lambda r: (len(r["U"]), r["U"], len(r["U'"]), r["U'"]))


def _unpair_entries(rows, dec) -> dict:
    out = {}
    for r in rows:
        k = (frozenset(r["U"]), frozenset(r["U'"]))
        if k in out:
            raise SchemaError(f"duplicate entry {sorted(k[0])}|{sorted(k[1])}")
        out[k] = dec(r["entry"])
    return out


def _theory(t) -> dict:
    d = theory_to_json(t)
    d["complex"] = isinstance(t, ComplexOrientation)
    return d


def _untheory(d):
    t = theory_from_json(d)
    if d.get("complex"):
        t = ComplexOrientation(t.space, t.ref, t.table)
    return t


def _ag(m: AlmostGaussianMeasure) -> dict:
    return {"q": form_to_json(m.q), "p": m.p.to_json(), "tags": list(m.tags)}


def _unag(d) -> AlmostGaussianMeasure:
    q = form_from_json(d["q"])
    return AlmostGaussianMeasure(q.space, q, Polynomial.from_json(q.space, d["p"]), tuple(d["tags"]))


def _dist(x: DeskDistribution) -> dict:
    return {
        "support": x.support.to_json(),
        "density_p": x.density_p.to_json(),
        "density_q": None if x.density_q is None else form_to_json(x.density_q),
        "lines": sorted(x.lines),
    }


def _undist(d) -> DeskDistribution:
    sup = LinMap.from_json(d["support"])
    q = None if d["density_q"] is None else form_from_json(d["density_q"], SymBilForm)
    return DeskDistribution(sup, Polynomial.from_json(sup.source, d["density_p"]), q, frozenset(d["lines"]))


def _ext(e: ExteriorElement) -> dict:
    terms = []
    for k, c in sorted(e.terms.items()):
        if isinstance(c, Polynomial):
            terms.append({"indices": list(k), "poly": _poly(c)})
        else:
            terms.append({"indices": list(k), "coeff": coeff_to_str(c)})
    return {"space": e.space.to_json(), "terms": terms}


def _unext(d) -> ExteriorElement:
    terms = {}
    for t in d["terms"]:
        terms[tuple(t["indices"])] = _unpoly(t["poly"]) if "poly" in t else coeff_from_str(t["coeff"])
    return ExteriorElement(FinVec.from_json(d["space"]), terms)


def _form(w: AGForm) -> dict:
    return {
        "q": form_to_json(w.q),
        "degree": w.degree,
        "components": [{"indices": list(k), "coeff": p.to_json()} for k, p in sorted(w.components.items())],
    }


def _unform(d) -> AGForm:
    q = form_from_json(d["q"])
    w = AGForm(q, {tuple(c["indices"]): Polynomial.from_json(q.space, c["coeff"]) for c in d["components"]})
    if w.degree != d.get("degree"):
        raise SchemaError("stored degree does not match the components")
    return w


def _oform(w: OrientedForm) -> dict:
    return {"form": _form(w.form), "orientation": coeff_to_str(w.orientation), "tags": list(w.tags)}


def _unoform(d) -> OrientedForm:
    return OrientedForm(_unform(d["form"]), coeff_from_str(d["orientation"]), tuple(d["tags"]))


def _heis(op: HeisenbergOp) -> list:
    return [
        {"coeff": coeff_to_str(c), "word": [[g, [fmt_fraction(x) for x in vec]] for g, vec in word]}
        for c, word in op.terms
    ]


def _unheis(d) -> HeisenbergOp:
    terms = []
    for t in d:
        word = tuple((g, tuple(Fraction(x) for x in vec)) for g, vec in t["word"])
        terms.append((coeff_from_str(t["coeff"]), word))
    return HeisenbergOp(tuple(terms))


def _tuplify(x):
    return tuple(_tuplify(y) for y in x) if isinstance(x, list) else x


# type name -> (class, encoder, decoder)
CODECS = {
    "scalar": (Scalar, lambda s: {"terms": s.to_json()}, lambda d: Scalar.from_json(d["terms"])),
    "finvec": (FinVec, lambda v: v.to_json(), FinVec.from_json),
    "linmap": (LinMap, lambda m: m.to_json(), LinMap.from_json),
    "posdef_form": (PosDefForm, form_to_json, form_from_json),
    "bilinear_form": (SymBilForm, form_to_json, lambda d: form_from_json(d, SymBilForm)),
    "polynomial": (Polynomial, _poly, _unpoly),
    "ag_measure": (AlmostGaussianMeasure, _ag, _unag),
    "ag_function": (
        AGFunction,
        lambda f: {"q": form_to_json(f.q), "p": f.p.to_json()},
        lambda d: (lambda q: AGFunction(q.space, q, Polynomial.from_json(q.space, d["p"])))(form_from_json(d["q"])),
    ),
    "heisenberg_op": (HeisenbergOp, lambda op: {"terms": _heis(op)}, lambda d: _unheis(d["terms"])),
    "distribution": (DeskDistribution, _dist, _undist),
    "window": (WindowSpace, lambda w: w.to_json(), WindowSpace.from_json),
    "lattice_point": (
        LatticeSubspace,
        lambda u: {"window": u.space.to_json(), "indices": u.to_json()},
        lambda d: WindowSpace.from_json(d["window"]).point(d["indices"]),
    ),
    "dimension_theory": (
        DimensionTheory,
        lambda t: {"window": t.space.to_json(), "base_value": t.base_value},
        lambda d: DimensionTheory(WindowSpace.from_json(d["window"]), int(d["base_value"])),
    ),
    "det_theory": (DetTheory, _theory, _untheory),
    "haar_theory": (HaarTheory, _theory, _untheory),
    "orientation_theory": (OrientationTheory, _theory, _untheory),
    "gl_element": (
        GLElement,
        lambda g: {"window": g.space.to_json(), "matrix": [[fmt_fraction(x) for x in r] for r in g.matrix]},
        lambda d: GLElement(WindowSpace.from_json(d["window"]), tuple(tuple(Fraction(x) for x in r) for r in d["matrix"])),
    ),
    "quadratic_theory": (
        QuadraticTheory,
        lambda q: {"window": q.space.to_json(), "form": form_to_json(q.form)},
        lambda d: QuadraticTheory(WindowSpace.from_json(d["window"]), form_from_json(d["form"])),
    ),
    "measure_family": (
        CoherentMeasureFamily,
        lambda f: {"haar": _theory(f.haar), "entries": _pair_entries(f.entries, _ag)},
        lambda d: CoherentMeasureFamily(_untheory(d["haar"]), _unpair_entries(d["entries"], _unag)),
    ),
    "distribution_germ": (
        DistributionGerm,
        lambda g: {"haar": _theory(g.haar), "U": _key(g.u), "U'": _key(g.u_prime), "dist": _dist(g.dist)},
        lambda d: DistributionGerm(_untheory(d["haar"]), frozenset(d["U"]), frozenset(d["U'"]), _undist(d["dist"])),
    ),
    "exterior": (ExteriorElement, _ext, _unext),
    "super_space": (
        SuperVec,
        lambda w: {"even": w.even.to_json(), "odd": w.odd.to_json()},
        lambda d: SuperVec(FinVec.from_json(d["even"]), FinVec.from_json(d["odd"])),
    ),
    "super_measure": (
        SuperMeasure,
        lambda m: {
            "space": {"even": m.space.even.to_json(), "odd": m.space.odd.to_json()},
            "q": form_to_json(m.q),
            "density": _ext(m.density),
            "mu": coeff_to_str(m.mu),
            "tags": list(m.tags),
            "odd_tags": list(m.odd_tags),
        },
        lambda d: SuperMeasure(
            SuperVec(FinVec.from_json(d["space"]["even"]), FinVec.from_json(d["space"]["odd"])),
            form_from_json(d["q"]),
            _unext(d["density"]),
            Scalar.parse(d["mu"]),
            tuple(d["tags"]),
            tuple(d["odd_tags"]),
        ),
    ),
    "wedge_vector": (
        WedgeVector,
        lambda v: {
            "theory": _theory(v.theory),
            "stage": _key(v.stage),
            "terms": [[list(k), coeff_to_str(c)] for k, c in v.terms],
            "monomials": v.to_json(),
        },
        lambda d: WedgeVector.make(_untheory(d["theory"]), d["stage"], {tuple(k): coeff_from_str(c) for k, c in d["terms"]}),
    ),
    "form": (AGForm, _form, _unform),
    "oriented_form": (OrientedForm, _oform, _unoform),
    "derham_family": (
        DeRhamFamily,
        lambda f: {"orientation": _theory(f.orientation), "entries": _pair_entries(f.entries, _oform)},
        lambda d: DeRhamFamily(_untheory(d["orientation"]), _unpair_entries(d["entries"], _unoform)),
    ),
    "complex": (
        ComplexOfSpaces,
        lambda c: {"start": c.start, "spaces": [s.to_json() for s in c.spaces], "diffs": [m.to_json() for m in c.diffs]},
        lambda d: ComplexOfSpaces(
            tuple(FinVec.from_json(s) for s in d["spaces"]), tuple(LinMap.from_json(m) for m in d["diffs"]), int(d["start"])
        ),
    ),
    "report": (
        Report,
        lambda r: r.to_json(),
        lambda d: Report(d["name"], int(d["checked"]), [_tuplify(f) for f in d["failures"]]),
    ),
}


def type_name(obj) -> str:
    # most specific class first: subclasses are listed after their bases
    best = None
    for name, (cls, _, _) in CODECS.items():
        if type(obj) is cls:
            return name
        if isinstance(obj, cls):
            best = name
    if best is None:
        raise SchemaError(f"no serializer for {type(obj).__name__}")
    return best


def encode(obj) -> dict:
    name = type_name(obj)
    body = CODECS[name][1](obj)
    return {"type": name, "value": body}


def decode(d):
    if not isinstance(d, dict) or "type" not in d or "value" not in d:
        raise SchemaError("object is not a typed record")
    if d["type"] not in CODECS:
        raise SchemaError(f"unknown object type {d['type']!r}")
    return CODECS[d["type"]][2](d["value"])


@dataclass
class Workspace:
    window: int = 3
    objects: dict = field(default_factory=dict)
    log: list = field(default_factory=list)

    def put(self, name: str, obj, note: str | None = None) -> None:
        self.objects[name] = obj
        self.log.append(note or f"put {name}")

    def get(self, name: str):
        if name not in self.objects:
            raise SchemaError(f"no object named {name!r}")
        return self.objects[name]

    def __eq__(self, other):
        if not isinstance(other, Workspace) or self.window != other.window or self.log != other.log:
            return False
        if self.objects.keys() != other.objects.keys():
            return False
        return all(type(self.objects[k]) is type(other.objects[k]) and self.objects[k] == other.objects[k] for k in self.objects)


def to_json(ws: Workspace) -> dict:
    return {
        "schema": SCHEMA,
        "window": ws.window,
        "objects": {name: encode(obj) for name, obj in ws.objects.items()},
        "log": list(ws.log),
    }


def dumps(ws: Workspace) -> str:
    return json.dumps(to_json(ws), sort_keys=True, indent=1) + "\n"


def loads(text: str) -> Workspace:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not JSON: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("workspace file is not an object")
    ver = data.get("schema")
    if ver != SCHEMA:
        raise SchemaError(f"schema version {ver!r} is not supported (expected {SCHEMA!r})")
    objects = {}
    for name, rec in sorted(data.get("objects", {}).items()):
        try:
            objects[name] = decode(rec)
        except SchemaError as exc:
            raise SchemaError(f"object {name!r}: {exc}") from None
        except Exception as exc:  # any invariant failure names the object
            raise SchemaError(f"object {name!r}: {type(exc).__name__}: {exc}") from None
    return Workspace(int(data.get("window", 3)), objects, list(data.get("log", [])))


def dump(ws: Workspace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(ws))


def load(path) -> Workspace:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def sample_workspace(n: int = 2) -> Workspace:
    """A workspace holding one object of every persisted type."""
    from .agmeasures import fourier
    from .derham import build_semiinf_derham
    from .lattice import canonical_det_theory, complex_orientation, haar_from_det, orientation_from_det
    from .promeasures import gaussian_family, vacuum_delta

    space = WindowSpace.window(n)
    x = FinVec.standard(2, "X")
    q = PosDefForm(x, ((2, 1), (1, 2)))
    p = Polynomial(x, {(2, 0): Fraction(1, 2), (0, 1): 3, (0, 0): 1})
    mu = AlmostGaussianMeasure(x, q, p, ("|det Z/<1>|^*",))
    det_t = canonical_det_theory(space.u0)
    qt = QuadraticTheory.standard(space)
    fam = gaussian_family(qt, space.u0)
    odd = FinVec.standard(1, "T", prefix="t")
    sv = SuperVec(x, odd)
    ext = ExteriorElement(sv.odd_coords(), {(): 2, (0,): Fraction(-3, 4)})
    cplx = ComplexOfSpaces.cone_of_identity(FinVec.standard(1, "V"))
    cspace = WindowSpace.window(2)
    ctheory = QuadraticTheory.standard(cspace)
    objs = {
        "scalar": Scalar.sigma(2) * Scalar.sqrt(Fraction(3, 2)),
        "space": x,
        "map": LinMap(x, FinVec.standard(1, "Y", prefix="y"), ((1, -1),)),
        "q": q,
        "bilinear": SymBilForm(x, ((0, 1), (1, 0))),
        "p": p,
        "mu": mu,
        "f": fourier(AlmostGaussianMeasure(x, q, p)),
        "op": HeisenbergOp.vector((1, 0)) * HeisenbergOp.covector((0, 2)),
        "dist": DeskDistribution.point_mass(x, 2),
        "window": space,
        "u0": space.u0,
        "dim": DimensionTheory.vanishing_at(space.u0),
        "det": det_t,
        "haar": haar_from_det(det_t),
        "orient": orientation_from_det(det_t),
        "complex_orient": complex_orientation(cspace),
        "g": GLElement(space, tuple(tuple(Fraction(int(i == j) + int(j == i + 1)) for j in range(space.size)) for i in range(space.size))),
        "qtheory": qt,
        "family": fam,
        "germ": vacuum_delta(fam.haar, space.u0),
        "ext": ext,
        "super_space": sv,
        "super_mu": SuperMeasure.product(AlmostGaussianMeasure.gaussian(q), ext, odd),
        "wedge": WedgeVector.vacuum(det_t),
        "form": AGForm(q, {(0,): p, (0, 1): Polynomial.constant(x, 5)}),
        "oform": OrientedForm(AGForm.gaussian(q, (1,)), -1, ("OR Z/<1>",)),
        "derham": build_semiinf_derham(complex_orientation(cspace), ctheory, 1),
        "cone": cplx,
        "report": Report("sample", 3, [("edge", (1, 2), "x")]),
    }
    ws = Workspace(n)
    for name, obj in objs.items():
        ws.put(name, obj)
    return ws
