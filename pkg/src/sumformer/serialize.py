"""Versioned structured-text serialization.

Grammar (line oriented, whitespace separated):

    format sumformer/1
    object <kind>
    field <name> <int|float|str|bool|none> <value...>
    matrix <name> <rows> <cols>       # followed by rows lines of floats
    imatrix <name> <rows> <cols>      # followed by rows lines of ints
    end

Floats are written with repr(), which round-trips float64 exactly, so
dump/load is bitwise faithful.  One file holds one object; nested
structure is flattened into indexed names (e.g. ``psi.W0``).
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .mlp import MlpParams, MlpSpec
from .model import (
    DiscreteSumformer,
    LatentPolynomial,
    MlpCombiner,
    MlpFeatureMap,
    PolynomialCombiner,
    PolynomialFeatureMap,
    SumformerModel,
)
from .multisym import enumerate_multidegrees

FORMAT_LINE = "format sumformer/1"


# ---------------------------------------------------------------------------
# Generic writer / reader
# ---------------------------------------------------------------------------

def _dump(kind: str, fields: dict, matrices: list[tuple[str, np.ndarray]]) -> str:
    lines = [FORMAT_LINE, f"object {kind}"]
    for name, value in fields.items():
        if isinstance(value, np.integer):
            value = int(value)
        elif isinstance(value, np.floating):
            value = float(value)
        if value is None:
            lines.append(f"field {name} none -")
        elif isinstance(value, bool):
            lines.append(f"field {name} bool {int(value)}")
        elif isinstance(value, int):
            lines.append(f"field {name} int {value}")
        elif isinstance(value, float):
            lines.append(f"field {name} float {float(value)!r}")
        else:
            lines.append(f"field {name} str {value}")
    for name, mat in matrices:
        mat = np.asarray(mat)
        if mat.ndim != 2:
            raise ConfigError(f"matrix {name} must be 2-D")
        tag = "imatrix" if np.issubdtype(mat.dtype, np.integer) else "matrix"
        lines.append(f"{tag} {name} {mat.shape[0]} {mat.shape[1]}")
        for row in mat:
            if tag == "imatrix":
                lines.append(" ".join(str(int(v)) for v in row))
            else:
                lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("end")
    return "\n".join(lines) + "\n"


def _load(text: str) -> tuple[str, dict, dict]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != FORMAT_LINE:
        raise ConfigError("missing or unsupported format header")
    if not lines[1].startswith("object "):
        raise ConfigError("missing object line")
    kind = lines[1].split(None, 1)[1]
    fields: dict = {}
    matrices: dict = {}
    i = 2
    while i < len(lines):
        parts = lines[i].split()
        if parts[0] == "end":
            break
        if parts[0] == "field":
            name, ftype = parts[1], parts[2]
            raw = lines[i].split(None, 3)[3]
            if ftype == "none":
                fields[name] = None
            elif ftype == "bool":
                fields[name] = bool(int(raw))
            elif ftype == "int":
                fields[name] = int(raw)
            elif ftype == "float":
                fields[name] = float(raw)
            else:
                fields[name] = raw
            i += 1
        elif parts[0] in ("matrix", "imatrix"):
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            dtype = np.int64 if parts[0] == "imatrix" else np.float64
            data = np.empty((rows, cols), dtype=dtype)
            for r in range(rows):
                row = lines[i + 1 + r].split()
                if len(row) != cols:
                    raise ConfigError(f"matrix {name}: row {r} has {len(row)} values, want {cols}")
                data[r] = [dtype(v) for v in row]
            matrices[name] = data
            i += 1 + rows
        else:
            raise ConfigError(f"unexpected line: {lines[i]!r}")
    else:
        raise ConfigError("missing end line")
    return kind, fields, matrices


# ---------------------------------------------------------------------------
# Head specs and sum-extraction constructions
# ---------------------------------------------------------------------------

def _mlp_entries(prefix: str, spec: MlpSpec, params: MlpParams):
    fields = {f"{prefix}widths": ",".join(str(w) for w in spec.layer_widths)}
    mats = []
    for i, (w, b) in enumerate(params):
        mats.append((f"{prefix}W{i}", w))
        mats.append((f"{prefix}b{i}", b))
    return fields, mats


def _mlp_from_entries(prefix: str, fields: dict, matrices: dict) -> tuple[MlpSpec, MlpParams]:
    widths = tuple(int(w) for w in fields[f"{prefix}widths"].split(","))
    spec = MlpSpec(widths)
    params = [
        (matrices[f"{prefix}W{i}"], matrices[f"{prefix}b{i}"])
        for i in range(spec.n_layers)
    ]
    return spec, params


def dump_head(spec) -> str:
    from . import attention as att

    fields: dict = {"variant": spec.variant}
    mats = [("W_Q", spec.w_q), ("W_K", spec.w_k), ("W_V", spec.w_v)]
    if isinstance(spec, att.LinformerHeadSpec):
        mats += [("E", spec.e), ("F", spec.f)]
    elif isinstance(spec, att.PerformerHeadSpec):
        mats.append(("omegas", spec.omegas))
    return _dump("attention_head", fields, mats)


def load_head(text: str):
    from . import attention as att

    kind, fields, mats = _load(text)
    if kind != "attention_head":
        raise ConfigError(f"expected attention_head, got {kind}")
    variant = fields["variant"]
    base = (mats["W_Q"], mats["W_K"], mats["W_V"])
    if variant == "standard":
        return att.StandardHeadSpec(*base)
    if variant == "linformer":
        return att.LinformerHeadSpec(*base, e=mats["E"], f=mats["F"])
    if variant == "performer":
        return att.PerformerHeadSpec(*base, omegas=mats["omegas"])
    raise ConfigError(f"unknown head variant {variant!r}")


def dump_construction(con) -> str:
    from . import attention as att

    fields = {
        "variant": con.variant,
        "n": con.n,
        "d": con.d,
        "n_max": con.basis.n_max,
        "k": con.k,
        "seed": con.seed,
        "lambda": con.lambda_value,
        "post_scale": con.post_scale,
        "wv_scale": con.wv_scale,
        "phi_kind": con.phi_kind,
    }
    block = con.network.blocks[0]
    head = block.heads[0]
    mats = [("W_Q", head.w_q), ("W_K", head.w_k), ("W_V", head.w_v)]
    if isinstance(head, att.LinformerHeadSpec):
        mats += [("E", head.e), ("F", head.f)]
    elif isinstance(head, att.PerformerHeadSpec):
        mats.append(("omegas", head.omegas))
    mats.append(("W_O", block.w_o))
    fc_fields, fc_mats = _mlp_entries("fc.", block.fc_spec, list(block.fc_params))
    fields.update(fc_fields)
    mats += fc_mats
    if con.phi_kind == "mlp":
        phi_fields, phi_mats = _mlp_entries("phi.", con.phi_spec, con.phi_params)
        fields.update(phi_fields)
        mats += phi_mats
    return _dump("sum_extraction", fields, mats)


def load_construction(text: str):
    from . import attention as att
    from .mlp import mlp_forward
    from .multisym import monomial_feature_matrix

    kind, fields, mats = _load(text)
    if kind != "sum_extraction":
        raise ConfigError(f"expected sum_extraction, got {kind}")
    basis = enumerate_multidegrees(fields["d"], fields["n_max"])
    variant = fields["variant"]
    base = (mats["W_Q"], mats["W_K"], mats["W_V"])
    if variant == "standard":
        head = att.StandardHeadSpec(*base)
    elif variant == "linformer":
        head = att.LinformerHeadSpec(*base, e=mats["E"], f=mats["F"])
    elif variant == "performer":
        head = att.PerformerHeadSpec(*base, omegas=mats["omegas"])
    else:
        raise ConfigError(f"unknown variant {variant!r}")
    fc_spec, fc_params = _mlp_from_entries("fc.", fields, mats)
    block = att.TransformerBlockSpec(
        heads=(head,), w_o=mats["W_O"], fc_spec=fc_spec, fc_params=tuple(fc_params),
    )
    if fields["phi_kind"] == "mlp":
        phi_spec, phi_params = _mlp_from_entries("phi.", fields, mats)
        phi = lambda rows: mlp_forward(phi_spec, phi_params, rows)
    else:
        phi_spec = phi_params = None
        phi = lambda rows: monomial_feature_matrix(rows, basis)
    return att.SumExtractionConstruction(
        variant=variant, n=fields["n"], d=fields["d"], basis=basis,
        model_dim=1 + fields["d"] + 2 * basis.size,
        network=att.TransformerNetworkSpec(blocks=(block,)),
        phi_kind=fields["phi_kind"], phi_spec=phi_spec, phi_params=phi_params,
        k=fields["k"], seed=fields["seed"], lambda_value=fields["lambda"],
        post_scale=fields["post_scale"], wv_scale=fields["wv_scale"], _phi=phi,
    )


# ---------------------------------------------------------------------------
# Sumformer models
# ---------------------------------------------------------------------------

def dump_model(model: SumformerModel) -> str:
    fields: dict = {"d": model.d, "d_latent": model.d_latent}
    mats: list[tuple[str, np.ndarray]] = []
    if isinstance(model.phi, PolynomialFeatureMap):
        fields["phi_kind"] = "polynomial"
        fields["phi_n_max"] = model.phi.basis.n_max
    else:
        fields["phi_kind"] = "mlp"
        f, m = _mlp_entries("phi.", model.phi.spec, model.phi.params)
        fields.update(f)
        mats += m
    if isinstance(model.psi, MlpCombiner):
        fields["psi_kind"] = "mlp"
        f, m = _mlp_entries("psi.", model.psi.spec, model.psi.params)
        fields.update(f)
        mats += m
    else:
        fields["psi_kind"] = "polynomial"
        fields["psi_terms"] = len(model.psi.terms)
        fields["psi_out_width"] = model.psi.out_width
        for t, (alpha, latent_poly) in enumerate(model.psi.terms):
            mats.append((f"psi.term{t}.alpha", np.array([alpha], dtype=np.int64)))
            coeffs = np.vstack([c for c, _ in latent_poly.terms])
            exps = np.array([e for _, e in latent_poly.terms], dtype=np.int64)
            mats.append((f"psi.term{t}.coeffs", coeffs))
            mats.append((f"psi.term{t}.exps", exps))
    return _dump("sumformer_model", fields, mats)


def load_model(text: str) -> SumformerModel:
    kind, fields, mats = _load(text)
    if kind != "sumformer_model":
        raise ConfigError(f"expected sumformer_model, got {kind}")
    d = fields["d"]
    if fields["phi_kind"] == "polynomial":
        phi = PolynomialFeatureMap(enumerate_multidegrees(d, fields["phi_n_max"]))
    else:
        spec, params = _mlp_from_entries("phi.", fields, mats)
        phi = MlpFeatureMap(spec, params)
    if fields["psi_kind"] == "mlp":
        spec, params = _mlp_from_entries("psi.", fields, mats)
        psi = MlpCombiner(spec, params)
    else:
        terms = []
        for t in range(fields["psi_terms"]):
            alpha = tuple(int(v) for v in mats[f"psi.term{t}.alpha"][0])
            coeffs = mats[f"psi.term{t}.coeffs"]
            exps = mats[f"psi.term{t}.exps"]
            latent_poly = LatentPolynomial(tuple(
                (coeffs[r], tuple(int(v) for v in exps[r])) for r in range(coeffs.shape[0])
            ))
            terms.append((alpha, latent_poly))
        psi = PolynomialCombiner(tuple(terms), fields["psi_out_width"])
    return SumformerModel(d=d, d_latent=fields["d_latent"], phi=phi, psi=psi)


def export_discrete_table(ds: DiscreteSumformer) -> str:
    """Human-inspectable dump of the lookup table, one entry per line."""
    lines = [
        FORMAT_LINE,
        "object discrete_table",
        f"field delta int {ds.delta_cells}",
        f"field n int {ds.n}",
        f"field d int {ds.d}",
        f"field entries int {len(ds.table)}",
    ]
    for (cell, hist), value in sorted(ds.table.items()):
        cell_s = ",".join(str(c) for c in cell)
        hist_s = ",".join(str(h) for h in hist)
        value_s = " ".join(repr(float(v)) for v in value)
        lines.append(f"entry {cell_s} {hist_s} {value_s}")
    lines.append("end")
    return "\n".join(lines) + "\n"
