"""Chain and sidecar persistence.

Chains are line-delimited JSON, one sample per line, with matrices
flattened row-major alongside an explicit process count.  Parents use
the convention 0 = background, j = 1-based index of the parent event.
The format round-trips exactly (floats via repr) which makes resumed
chains byte-identical to uninterrupted ones.
"""

import json

import numpy as np

from .background import ConstantBackground, LgcpBackground
from .errors import ParseError
from .gibbs import ChainSample
from .kernels import GpKernelSpec
from .model import NetworkState, ParentAssignment


def kernel_spec_to_dict(spec):
    if spec.kind == "sum":
        return {"kind": "sum",
                "components": [kernel_spec_to_dict(c) for c in spec.components]}
    out = {"kind": spec.kind, "length_scale": spec.length_scale,
           "variance": spec.variance}
    if spec.period is not None:
        out["period"] = spec.period
    return out


def kernel_spec_from_dict(d):
    if d["kind"] == "sum":
        return GpKernelSpec("sum", components=[
            kernel_spec_from_dict(c) for c in d["components"]])
    return GpKernelSpec(d["kind"], period=d.get("period"),
                        length_scale=d.get("length_scale", 1.0),
                        variance=d.get("variance", 1.0))


def background_to_dict(bg):
    if bg.kind == "constant":
        return {"kind": "constant", "rates": bg.rates.tolist(),
                "gamma_prior": list(bg.gamma_prior)}
    return {
        "kind": "lgcp",
        "offsets": bg.offsets.tolist(),
        "scales": bg.scales.tolist(),
        "grid_y": bg.grid_y.tolist(),
        "kernel": kernel_spec_to_dict(bg.kernel),
        "horizon": bg.horizon,
        "offset_prior": list(bg.offset_prior),
        "scale_prior": list(bg.scale_prior),
        "ess_sweeps": bg.ess_sweeps,
        "proposal_scale": bg.proposal_scale,
    }


def background_from_dict(d):
    if d["kind"] == "constant":
        return ConstantBackground(np.array(d["rates"]),
                                  tuple(d.get("gamma_prior", (1.0, 1.0))))
    return LgcpBackground(
        np.array(d["offsets"]), np.array(d["scales"]), np.array(d["grid_y"]),
        kernel_spec_from_dict(d["kernel"]), d["horizon"],
        tuple(d.get("offset_prior", (0.0, 1.0))),
        tuple(d.get("scale_prior", (0.0, 1.0))),
        d.get("ess_sweeps", 1), d.get("proposal_scale", 0.2))


def sample_to_record(sample):
    """Flatten a ChainSample into a JSON-serializable dict."""
    net = sample.network
    K = net.num_processes
    return {
        "iteration": sample.iteration,
        "loglik": sample.loglik,
        "num_processes": K,
        "dt_max": sample.dt_max,
        "adjacency": net.A.astype(int).ravel().tolist(),
        "weights": net.W.ravel().tolist(),
        "impulse_mu": net.impulse_mu.ravel().tolist(),
        "impulse_tau": net.impulse_tau.ravel().tolist(),
        "allow_self_edges": bool(net.allow_self_edges),
        "background": background_to_dict(sample.background),
        "parents": sample.parents.to_one_based(),
        "graph_hypers": sample.graph_hypers,
        "weight_scale": sample.weight_scale,
        "process_map": (None if sample.process_map is None
                        else np.asarray(sample.process_map).tolist()),
    }


def record_to_sample(rec):
    """Rebuild a ChainSample from a parsed chain record."""
    K = int(rec["num_processes"])

    def mat(key, dtype=float):
        return np.array(rec[key], dtype=dtype).reshape(K, K)

    net = NetworkState(mat("adjacency", np.int8), mat("weights"),
                       mat("impulse_mu"), mat("impulse_tau"),
                       rec.get("allow_self_edges", False))
    return ChainSample(
        network=net,
        background=background_from_dict(rec["background"]),
        parents=ParentAssignment.from_one_based(rec["parents"]),
        graph_hypers=rec.get("graph_hypers", {}),
        weight_scale=rec.get("weight_scale", 1.0),
        process_map=(None if rec.get("process_map") is None
                     else np.array(rec["process_map"], dtype=np.int64)),
        iteration=int(rec["iteration"]),
        loglik=float(rec["loglik"]),
        dt_max=float(rec["dt_max"]),
    )


def append_record(fh, sample):
    fh.write(json.dumps(sample_to_record(sample)) + "\n")
    fh.flush()


def read_chain(path):
    """Parse a whole chain file; malformed lines report their number."""
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                samples.append(record_to_sample(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ParseError(f"bad chain record: {exc}", line=lineno) from exc
    return samples


def read_last_record(path):
    """Return (sample, count) for the final record of a chain file, or
    (None, 0) for an empty/missing file."""
    last = None
    count = 0
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                count += 1
                last_line, last_no = line, lineno
    except FileNotFoundError:
        return None, 0
    if count == 0:
        return None, 0
    try:
        last = record_to_sample(json.loads(last_line))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise ParseError(f"bad chain record: {exc}", line=last_no) from exc
    return last, count


def write_truth_sidecar(path, params, parents, graph_hypers=None):
    """Persist simulation ground truth: network, impulse parameters,
    background spec, and the true parent vector."""
    net = params.network
    doc = {
        "num_processes": net.num_processes,
        "dt_max": params.dt_max,
        "horizon": params.horizon,
        "adjacency": net.A.astype(int).ravel().tolist(),
        "weights": net.W.ravel().tolist(),
        "impulse_mu": net.impulse_mu.ravel().tolist(),
        "impulse_tau": net.impulse_tau.ravel().tolist(),
        "allow_self_edges": bool(net.allow_self_edges),
        "background": background_to_dict(params.background),
        "parents": parents.to_one_based() if parents is not None else None,
        "graph_hypers": graph_hypers or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def read_truth_sidecar(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    K = int(doc["num_processes"])

    def mat(key, dtype=float):
        return np.array(doc[key], dtype=dtype).reshape(K, K)

    from .model import HawkesParams

    net = NetworkState(mat("adjacency", np.int8), mat("weights"),
                       mat("impulse_mu"), mat("impulse_tau"),
                       doc.get("allow_self_edges", False))
    params = HawkesParams(net, background_from_dict(doc["background"]),
                          float(doc["dt_max"]), doc.get("horizon"))
    parents = (None if doc.get("parents") is None
               else ParentAssignment.from_one_based(doc["parents"]))
    return params, parents
