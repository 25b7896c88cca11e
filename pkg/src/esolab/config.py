"""
JSON configuration ingestion.

A config document carries up to six sections: plant, reference, observer,
controller, sim, and sweep.  The schema is validated fully (unknown keys
are rejected) before any numerics run, and every violation is reported
with the JSON-pointer path of the offending value.
"""

from __future__ import annotations

import json

from .controller import SlidingController
from .errors import ConfigError, ValidationError
from .expr import parse
from .gains import GainSet, PoleSet
from .plant import Constant, PlantModel, Polynomial, ReferenceSignal, Sinusoid
from .sim import ExperimentConfig

_SECTIONS = ("plant", "reference", "observer", "controller", "sim", "sweep")

_KEYS = {
    "plant": ({"order", "drift", "b"}, {"x0"}),
    "reference": ({"terms"}, set()),
    "observer": ({"poles", "epsilon"}, {"ehat0"}),
    "controller": ({"a", "u0"}, {"switch"}),
    "sim": ({"dt", "t_end"}, {"record_stride", "m_bound"}),
    "sweep": ({"epsilons"}, set()),
}

_TERM_KEYS = {
    "sinusoid": ({"type", "amplitude", "omega"}, {"phase"}),
    "polynomial": ({"type", "coeffs"}, set()),
    "constant": ({"type", "value"}, set()),
}


def _check_keys(obj: dict, pointer: str, required: set, optional: set):
    for key in obj:
        if key not in required and key not in optional:
            raise ConfigError(f"{pointer}/{key}", "unknown key")
    for key in sorted(required):
        if key not in obj:
            raise ConfigError(pointer, f"missing required key {key!r}")


def _dict(value, pointer: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(pointer, "expected an object")
    return value


def _number(value, pointer: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(pointer, f"expected a number, got {value!r}")
    return float(value)


def _integer(value, pointer: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(pointer, f"expected an integer, got {value!r}")
    return value


def _string(value, pointer: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(pointer, f"expected a string, got {value!r}")
    return value


def _number_list(value, pointer: str) -> list:
    if not isinstance(value, list):
        raise ConfigError(pointer, f"expected an array, got {value!r}")
    return [_number(v, f"{pointer}/{i}") for i, v in enumerate(value)]


def validate_document(doc: dict) -> None:
    """Structural validation of every section that is present."""
    _dict(doc, "/")
    for key in doc:
        if key not in _SECTIONS:
            raise ConfigError(f"/{key}", "unknown section")
    for name in _SECTIONS:
        if name not in doc:
            continue
        section = _dict(doc[name], f"/{name}")
        required, optional = _KEYS[name]
        _check_keys(section, f"/{name}", required, optional)

    if "plant" in doc:
        plant = doc["plant"]
        order = _integer(plant["order"], "/plant/order")
        if order < 1:
            raise ConfigError("/plant/order", f"must be >= 1, got {order}")
        _string(plant["drift"], "/plant/drift")
        _number(plant["b"], "/plant/b")
        if "x0" in plant:
            x0 = _number_list(plant["x0"], "/plant/x0")
            if len(x0) != order:
                raise ConfigError(
                    "/plant/x0", f"needs {order} entries, got {len(x0)}")

    if "reference" in doc:
        terms = doc["reference"]["terms"]
        if not isinstance(terms, list) or not terms:
            raise ConfigError("/reference/terms", "expected a non-empty array")
        for i, term in enumerate(terms):
            pointer = f"/reference/terms/{i}"
            term = _dict(term, pointer)
            kind = term.get("type")
            if kind not in _TERM_KEYS:
                raise ConfigError(
                    f"{pointer}/type",
                    f"expected one of {sorted(_TERM_KEYS)}, got {kind!r}")
            required, optional = _TERM_KEYS[kind]
            _check_keys(term, pointer, required, optional)
            if kind == "sinusoid":
                _number(term["amplitude"], f"{pointer}/amplitude")
                _number(term["omega"], f"{pointer}/omega")
                if "phase" in term:
                    _number(term["phase"], f"{pointer}/phase")
            elif kind == "polynomial":
                coeffs = _number_list(term["coeffs"], f"{pointer}/coeffs")
                if not coeffs:
                    raise ConfigError(f"{pointer}/coeffs", "must be non-empty")
            else:
                _number(term["value"], f"{pointer}/value")

    if "observer" in doc:
        obs = doc["observer"]
        poles = _number_list(obs["poles"], "/observer/poles")
        _number(obs["epsilon"], "/observer/epsilon")
        if "ehat0" in obs:
            ehat0 = _number_list(obs["ehat0"], "/observer/ehat0")
            if len(ehat0) != len(poles):
                raise ConfigError(
                    "/observer/ehat0",
                    f"needs {len(poles)} entries, got {len(ehat0)}")

    if "controller" in doc:
        ctrl = doc["controller"]
        _number_list(ctrl["a"], "/controller/a")
        _number(ctrl["u0"], "/controller/u0")
        if "switch" in ctrl:
            sw = _dict(ctrl["switch"], "/controller/switch")
            _check_keys(sw, "/controller/switch", {"mode"}, {"phi"})
            mode = _string(sw["mode"], "/controller/switch/mode")
            if mode not in ("sign", "saturation"):
                raise ConfigError("/controller/switch/mode",
                                  f"expected 'sign' or 'saturation', got "
                                  f"{mode!r}")
            if "phi" in sw:
                _number(sw["phi"], "/controller/switch/phi")

    if "sim" in doc:
        sim = doc["sim"]
        _number(sim["dt"], "/sim/dt")
        _number(sim["t_end"], "/sim/t_end")
        if "record_stride" in sim:
            _integer(sim["record_stride"], "/sim/record_stride")
        if "m_bound" in sim:
            _number(sim["m_bound"], "/sim/m_bound")

    if "sweep" in doc:
        _number_list(doc["sweep"]["epsilons"], "/sweep/epsilons")


def load_config(path: str) -> dict:
    """Read and structurally validate a config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("/", f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError("/", f"invalid JSON: {exc}")
    validate_document(doc)
    return doc


def require_sections(doc: dict, *names: str) -> None:
    for name in names:
        if name not in doc:
            raise ConfigError(f"/{name}", "section is required here")


def _wrap(pointer: str):
    """Context that rewrites ValidationError into ConfigError with a pointer."""

    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, ValidationError) \
                    and not isinstance(exc, ConfigError):
                raise ConfigError(pointer, str(exc)) from exc
            return False

    return _Ctx()


def build_poles(doc: dict) -> PoleSet:
    require_sections(doc, "observer")
    with _wrap("/observer/poles"):
        return PoleSet(tuple(doc["observer"]["poles"]))


def build_gains(doc: dict, epsilon: float | None = None) -> GainSet:
    poles = build_poles(doc)
    eps = doc["observer"]["epsilon"] if epsilon is None else epsilon
    with _wrap("/observer/epsilon"):
        return GainSet.from_poles(poles, float(eps))


def observer_initial(doc: dict) -> tuple:
    obs = doc["observer"]
    if "ehat0" in obs:
        return tuple(float(v) for v in obs["ehat0"])
    return (0.0,) * len(obs["poles"])


def build_reference(doc: dict) -> ReferenceSignal:
    require_sections(doc, "reference")
    terms = []
    for term in doc["reference"]["terms"]:
        kind = term["type"]
        if kind == "sinusoid":
            terms.append(Sinusoid(amplitude=float(term["amplitude"]),
                                  omega=float(term["omega"]),
                                  phase=float(term.get("phase", 0.0))))
        elif kind == "polynomial":
            terms.append(Polynomial(tuple(term["coeffs"])))
        else:
            terms.append(Constant(float(term["value"])))
    return ReferenceSignal(tuple(terms))


def build_plant(doc: dict) -> PlantModel:
    require_sections(doc, "plant")
    plant = doc["plant"]
    with _wrap("/plant/drift"):
        drift = parse(plant["drift"])
    order = plant["order"]
    x0 = tuple(plant.get("x0", [0.0] * order))
    with _wrap("/plant"):
        return PlantModel(n=order, drift=drift, b=float(plant["b"]),
                          initial_state=x0)


def build_controller(doc: dict, b: float) -> SlidingController:
    require_sections(doc, "controller")
    ctrl = doc["controller"]
    sw = ctrl.get("switch", {"mode": "sign"})
    with _wrap("/controller"):
        return SlidingController(
            a=tuple(ctrl["a"]), u0=float(ctrl["u0"]), b=b,
            switch_mode=sw["mode"], phi=sw.get("phi"))


def build_experiment(doc: dict) -> ExperimentConfig:
    require_sections(doc, "plant", "reference", "observer", "controller",
                     "sim")
    plant = build_plant(doc)
    sim = doc["sim"]
    with _wrap("/sim"):
        return ExperimentConfig(
            plant=plant,
            reference=build_reference(doc),
            gains=build_gains(doc),
            controller=build_controller(doc, plant.b),
            observer_initial=observer_initial(doc),
            dt=float(sim["dt"]),
            t_end=float(sim["t_end"]),
            m_bound=(float(sim["m_bound"]) if "m_bound" in sim else None),
            record_stride=int(sim.get("record_stride", 1)),
        )


def sweep_epsilons(doc: dict) -> list:
    require_sections(doc, "sweep")
    return [float(v) for v in doc["sweep"]["epsilons"]]
