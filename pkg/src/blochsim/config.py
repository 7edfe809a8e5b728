"""Two-tier plain-text run configuration.

A run is described by a key-parameters file (system size and bookkeeping)
that names a control-parameters file (physics and solver settings).  Both
use `key = value` lines; `!` starts a comment, indexed keys look like
Rabif(2,1,1), Fortran-style floats (5.0d0) and quoted strings are accepted,
group header lines (&...) and bare / terminators are ignored.  Unknown keys
are rejected with the file name and line number.

State labels in indexed keys run from nmin upward and are relabelled
internally to 1..N; field labels run from 1 to nfields.
"""

import re
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Optional

import numpy as np

from .system import FieldSpec, StateNumbering, SystemSpec, init_rho


class ConfigParseError(Exception):
    """Malformed configuration text (bad grammar, unknown key, bad literal)."""


class ConfigValidationError(Exception):
    """Well-formed configuration with inconsistent or unsupported content."""


_IDENT = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(\s*([0-9+\-][0-9+\-,\s]*)\))?$")


def _strip_comment(line: str) -> str:
    out = []
    in_quote = False
    for ch in line:
        if ch == "'":
            in_quote = not in_quote
        if ch == "!" and not in_quote:
            break
        out.append(ch)
    return "".join(out)


def _parse_scalar(text: str, where: str):
    tok = text.strip().rstrip(",").strip()
    if not tok:
        raise ConfigParseError(f"{where}: empty value")
    if tok.startswith("'") and tok.endswith("'") and len(tok) >= 2:
        return tok[1:-1]
    if tok.startswith("(") and tok.endswith(")"):
        parts = tok[1:-1].split(",")
        if len(parts) != 2:
            raise ConfigParseError(f"{where}: complex value needs (re, im)")
        re_p = _parse_scalar(parts[0], where)
        im_p = _parse_scalar(parts[1], where)
        return complex(float(re_p), float(im_p))
    norm = tok.replace("d", "e").replace("D", "e")
    try:
        if re.fullmatch(r"[+-]?\d+", tok):
            return int(tok)
        return float(norm)
    except ValueError:
        raise ConfigParseError(f"{where}: cannot parse value '{tok}'")


def _read_assignments(path: Path):
    """Yield (key_lower, indices or None, value, where) for each assignment."""
    out = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line or line.startswith("&") or line == "/":
            continue
        where = f"{path.name}:{lineno}"
        if "=" not in line:
            raise ConfigParseError(f"{where}: expected 'key = value', "
                                   f"got '{line}'")
        lhs, rhs = line.split("=", 1)
        m = _IDENT.match(lhs.strip())
        if not m:
            raise ConfigParseError(f"{where}: bad key '{lhs.strip()}'")
        name = m.group(1).lower()
        idx = None
        if m.group(2) is not None:
            try:
                idx = tuple(int(p) for p in m.group(2).split(","))
            except ValueError:
                raise ConfigParseError(f"{where}: bad index list in "
                                       f"'{lhs.strip()}'")
        out.append((name, idx, _parse_scalar(rhs, where), where))
    return out


# key tables: name -> (n_indices, python type or None for any-number)
_KEYPARAMS = {
    "nstates": (0, int),
    "nmin": (0, int),
    "nfields": (0, int),
    "icmplxfld": (0, int),
    "filename_controlparams": (0, str),
}

_CONTROL_SCALARS = {
    "icalc": int, "irabi": int, "inoncw": int, "iweakprb": int,
    "idoppler": int, "istart": int, "imethod": int, "nsubsteps": int,
    "n_time_steps": int, "nt_writeout": int, "izrule": int,
    "n_z_steps": int, "nz_writeout": int, "itdfieldsaorb": int,
    "iappend": int, "zmax": float, "density": float, "urms": float,
    "tmin": float, "tmax": float, "n_v_classes": int, "v_span": float,
    "filename_tdamps_in": str, "filename_tdamps_out": str,
    "filename_rho_out": str, "filename_velgrid": str,
}

_CONTROL_INDEXED = {
    "rabif": 3, "dip_mom": 3, "campl": 1, "gamma_decay_f": 2,
    "gamma_deph_f": 2, "energ_f": 1, "detuning_fact": 2, "detuning": 1,
    "idir": 1, "wavelength": 1, "popinit": 1, "envlp_shape": 1,
    "envlp_peak": 1, "envlp_center": 1, "envlp_width": 1,
    "envlp_peak_unit": 1, "iout": 2,
}


@dataclass
class RunConfig:
    """Everything a run needs, assembled from the two config files."""
    system: SystemSpec
    fields: list
    numbering: StateNumbering
    mode: str                          # "td" | "steady" | "mbe"
    initial_r: Optional[np.ndarray]
    method: str                        # rk4 | rk5 | adaptive | eigen
    n_substeps: int
    weak_probe: bool
    doppler: bool
    urms: float
    n_v_classes: int
    v_span: float
    velgrid_file: Optional[str]
    density: float
    t_start: float
    t_end: float
    n_time_steps: int
    nt_writeout: int
    z_max: float
    n_z_steps: int
    nz_writeout: int
    z_method: str
    noncw: bool
    td_fields_source: str              # "keys" | "file"
    tdamps_in: Optional[str]
    tdamps_out: str
    rho_out: Optional[str]
    append: bool
    envelopes: dict = dc_field(default_factory=dict)
    out_components: list = dc_field(default_factory=list)
    base_dir: Path = Path(".")


def _number(x, where) -> float:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    raise ConfigParseError(f"{where}: expected a number, got '{x}'")


def _check_type(name, val, typ, where):
    if typ is int:
        if not isinstance(val, int):
            raise ConfigParseError(f"{where}: {name} must be an integer")
        return val
    if typ is float:
        return _number(val, where)
    if typ is str:
        if not isinstance(val, str):
            raise ConfigParseError(f"{where}: {name} must be a quoted string")
        return val
    return val


def parse_config(keyparams_path) -> RunConfig:
    """Parse the key-parameters file and the control file it names."""
    kp_path = Path(keyparams_path)
    base = kp_path.parent

    kp = {}
    for name, idx, val, where in _read_assignments(kp_path):
        if name not in _KEYPARAMS:
            raise ConfigParseError(f"{where}: unknown key '{name}'")
        if idx is not None:
            raise ConfigParseError(f"{where}: {name} takes no indices")
        kp[name] = _check_type(name, val, _KEYPARAMS[name][1], where)

    for req in ("nstates", "nfields", "filename_controlparams"):
        if req not in kp:
            raise ConfigValidationError(f"{kp_path.name}: missing key '{req}'")
    n = kp["nstates"]
    nmin = kp.get("nmin", 1)
    nf = kp["nfields"]
    numbering = StateNumbering(nmin)
    if n < 2:
        raise ConfigValidationError("nstates must be at least 2")
    if nf < 1:
        raise ConfigValidationError("nfields must be at least 1")

    ctrl_path = base / kp["filename_controlparams"]
    scalars = {}
    rabi = {}
    dip = {}
    campl = {}
    gdec = {}
    gdeph = {}
    energ = {}
    dfact = {}
    detun = {}
    idir = {}
    wavel = {}
    popinit = {}
    envlp = {}
    iout = {}

    def state_idx(label, where):
        i = numbering.to_internal(label)
        if not 0 <= i < n:
            raise ConfigValidationError(
                f"{where}: state label {label} outside {nmin}..{nmin + n - 1}")
        return i

    def field_idx(label, where):
        if not 1 <= label <= nf:
            raise ConfigValidationError(
                f"{where}: field label {label} outside 1..{nf}")
        return label - 1

    for name, idx, val, where in _read_assignments(ctrl_path):
        if name in _CONTROL_SCALARS:
            if idx is not None:
                raise ConfigParseError(f"{where}: {name} takes no indices")
            scalars[name] = _check_type(name, val, _CONTROL_SCALARS[name],
                                        where)
            continue
        if name not in _CONTROL_INDEXED:
            raise ConfigParseError(f"{where}: unknown key '{name}'")
        if idx is None or len(idx) != _CONTROL_INDEXED[name]:
            raise ConfigParseError(
                f"{where}: {name} needs {_CONTROL_INDEXED[name]} indices")
        if name == "rabif":
            i, j, a = state_idx(idx[0], where), state_idx(idx[1], where), \
                field_idx(idx[2], where)
            rabi[(i, j, a)] = val if isinstance(val, complex) \
                else _number(val, where)
        elif name == "dip_mom":
            i, j, a = state_idx(idx[0], where), state_idx(idx[1], where), \
                field_idx(idx[2], where)
            dip[(i, j, a)] = val if isinstance(val, complex) \
                else _number(val, where)
        elif name == "campl":
            campl[field_idx(idx[0], where)] = val if isinstance(val, complex) \
                else _number(val, where)
        elif name == "gamma_decay_f":
            i, j = state_idx(idx[0], where), state_idx(idx[1], where)
            gdec[(i, j)] = _number(val, where)
        elif name == "gamma_deph_f":
            i, j = state_idx(idx[0], where), state_idx(idx[1], where)
            gdeph[(i, j)] = _number(val, where)
        elif name == "energ_f":
            energ[state_idx(idx[0], where)] = _number(val, where)
        elif name == "detuning_fact":
            i, a = state_idx(idx[0], where), field_idx(idx[1], where)
            dfact[(i, a)] = _number(val, where)
        elif name == "detuning":
            detun[field_idx(idx[0], where)] = _number(val, where)
        elif name == "idir":
            v = val
            if v not in (1, -1):
                raise ConfigValidationError(f"{where}: idir must be +-1")
            idir[field_idx(idx[0], where)] = v
        elif name == "wavelength":
            wavel[field_idx(idx[0], where)] = _number(val, where)
        elif name == "popinit":
            popinit[state_idx(idx[0], where)] = _number(val, where)
        elif name.startswith("envlp_"):
            envlp.setdefault(field_idx(idx[0], where), {})[name[6:]] = val
        elif name == "iout":
            i, j = state_idx(idx[0], where), state_idx(idx[1], where)
            if val:
                iout[(i, j)] = True

    icalc = scalars.get("icalc")
    if icalc not in (1, 2, 3):
        raise ConfigValidationError(
            "icalc must be 1 (time-dependent), 2 (steady state) or 3 "
            "(Maxwell-Bloch propagation)")
    mode = {1: "td", 2: "steady", 3: "mbe"}[icalc]

    use_rabi = scalars.get("irabi", 1) == 1
    if use_rabi and dip:
        raise ConfigValidationError("dip_mom given but iRabi = 1")
    if not use_rabi and rabi:
        raise ConfigValidationError("Rabif given but iRabi = 0")

    # assemble per-field coupling matrices
    fields = []
    for a in range(nf):
        rmat = np.zeros((n, n), dtype=complex)
        dmat = np.zeros((n, n), dtype=complex)
        for (i, j, fa), v in rabi.items():
            if fa == a:
                rmat[i, j] = v
        for (i, j, fa), v in dip.items():
            if fa == a:
                dmat[i, j] = v
        factors = np.zeros(n)
        for (i, fa), v in dfact.items():
            if fa == a:
                factors[i] = v
        kwargs = dict(
            detuning=detun.get(a, 0.0),
            detuning_factors=factors,
            wavelength_nm=wavel.get(a),
            direction=idir.get(a, 1),
        )
        try:
            if use_rabi:
                if not np.any(rmat):
                    raise ConfigValidationError(
                        f"field {a + 1} has no Rabif couplings")
                fld = FieldSpec(n, rabi_couplings=rmat, **kwargs)
            else:
                if not np.any(dmat):
                    raise ConfigValidationError(
                        f"field {a + 1} has no dip_mom couplings")
                fld = FieldSpec(n, dipole_moments=dmat,
                                amplitude=campl.get(a, 0.0), **kwargs)
        except ValueError as exc:
            raise ConfigValidationError(f"field {a + 1}: {exc}")
        fields.append(fld)

    decay = np.zeros((n, n))
    for (i, j), v in gdec.items():
        decay[i, j] = v
    deph = np.zeros((n, n))
    for (i, j), v in gdeph.items():
        deph[i, j] = v
    offsets = np.zeros(n)
    for i, v in energ.items():
        offsets[i] = v
    try:
        system = SystemSpec(n, energy_offsets=offsets, decay_rates=decay,
                            dephasing_rates=deph)
    except ValueError as exc:
        raise ConfigValidationError(str(exc))

    istart = scalars.get("istart", 1)
    if istart == 2:
        pops = np.zeros(n)
        for i, v in popinit.items():
            pops[i] = v
    elif istart == 1:
        pops = np.zeros(n)
        pops[0] = 1.0
    else:
        raise ConfigValidationError(f"unsupported istart = {istart}")
    try:
        initial_r = init_rho(pops)
    except ValueError as exc:
        raise ConfigValidationError(str(exc))

    method_map = {0: "eigen", 4: "rk4", 5: "rk5", 8: "adaptive"}
    imethod = scalars.get("imethod", 4)
    if imethod not in method_map:
        raise ConfigValidationError(
            f"unsupported imethod = {imethod} (0 eigen, 4 RK4, 5 RK5, "
            "8 adaptive)")
    izrule = scalars.get("izrule", 3)
    if izrule not in (1, 3):
        raise ConfigValidationError(
            f"unsupported izrule = {izrule} (1 RK4 in z, 3 Adams "
            "predictor-corrector)")

    doppler = scalars.get("idoppler", 0) == 1
    if doppler and scalars.get("urms", 0.0) <= 0:
        raise ConfigValidationError("iDoppler = 1 needs urms > 0 (m/s)")
    if doppler:
        for f in fields:
            if np.any(f.detuning_factors != 0) and f.wavelength_nm is None:
                raise ConfigValidationError(
                    "Doppler averaging needs a wavelength for every "
                    "detuned field")

    n_t = scalars.get("n_time_steps", 100)
    if n_t < 1:
        raise ConfigValidationError("n_time_steps must be positive")
    nzw = scalars.get("nz_writeout", 1)
    ntw = scalars.get("nt_writeout", 1)
    if nzw < 1 or ntw < 1:
        raise ConfigValidationError("writeout strides must be positive")

    if mode == "mbe":
        if "zmax" not in scalars or "n_z_steps" not in scalars:
            raise ConfigValidationError("MBE runs need zmax and n_z_steps")
        if scalars.get("density", 0.0) <= 0:
            raise ConfigValidationError("MBE runs need a positive density")
        for f in fields:
            if f.wavelength_nm is None:
                raise ConfigValidationError(
                    "MBE runs need a wavelength for every field")

    tdsrc = "file" if scalars.get("itdfieldsaorb", 1) == 2 else "keys"
    if mode in ("td", "mbe") and scalars.get("inoncw", 0) == 1 \
            and tdsrc == "keys":
        for a in range(nf):
            if a not in envlp or "shape" not in envlp[a]:
                raise ConfigValidationError(
                    f"field {a + 1}: inoncw = 1 with itdfieldsAorB = 1 needs "
                    "envlp_shape/envlp_peak/... keys")
            if "peak" not in envlp[a]:
                raise ConfigValidationError(
                    f"field {a + 1}: envlp_shape given without envlp_peak")

    return RunConfig(
        system=system,
        fields=fields,
        numbering=numbering,
        mode=mode,
        initial_r=initial_r,
        method=method_map[imethod],
        n_substeps=max(1, scalars.get("nsubsteps", 1)),
        weak_probe=scalars.get("iweakprb", 0) == 1,
        doppler=doppler,
        urms=scalars.get("urms", 0.0),
        n_v_classes=scalars.get("n_v_classes", 501),
        v_span=scalars.get("v_span", 5.0),
        velgrid_file=scalars.get("filename_velgrid"),
        density=scalars.get("density", 0.0),
        t_start=scalars.get("tmin", 0.0),
        t_end=scalars.get("tmax", scalars.get("tmin", 0.0) + 1.0),
        n_time_steps=n_t,
        nt_writeout=ntw,
        z_max=scalars.get("zmax", 0.0),
        n_z_steps=scalars.get("n_z_steps", 0),
        nz_writeout=nzw,
        z_method={1: "rk4_space", 3: "ab3am4"}[izrule],
        noncw=scalars.get("inoncw", 0) == 1,
        td_fields_source=tdsrc,
        tdamps_in=scalars.get("filename_tdamps_in"),
        tdamps_out=scalars.get("filename_tdamps_out", "outamplitudes.dat"),
        rho_out=scalars.get("filename_rho_out"),
        append=scalars.get("iappend", 0) == 1,
        envelopes=envlp,
        out_components=sorted(iout.keys()),
        base_dir=base,
    )
