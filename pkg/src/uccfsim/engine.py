"""Scenario configuration, Monte-Carlo orchestration, and result export.

A scenario is a plain nested dict (JSON on disk).  Every trial draws its
own RNG stream from (master seed, trial index), so results are bit-identical
no matter how many workers run the trials.  Each trial produces one record
per UE with analytic and measured link metrics plus a constraint audit of
the emitted allocation plan.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import alloc, apmp, channel, downlink, topology, training, uplink
from .modulation import CONSTELLATIONS, nearest_point, symbol_error_rate

DEFAULT_SCENARIO = {
    "name": "scenario",
    "seed": 0,
    "trials": 10,
    "topology": {
        "num_aps": 4, "num_ues": 2, "area_size": 250.0, "layout": "uniform",
        "ap_height": 15.0, "ue_height": 1.65, "carrier_freq_mhz": 1900.0,
        "max_ue_power": 0.1, "max_ap_power": 1.0, "noise_variance": 1e-12,
    },
    "channel": {
        "pathloss": "double_slope", "a": 2.0, "b": 2.0, "d_break": 100.0,
        "d0": 10.0, "d1": 50.0, "shadowing_std_db": 4.0,
        "num_taps": 2, "pdp_decay": 0.0,
    },
    "ofdm": {"num_subcarriers": 8},
    "association": {"method": "distance", "radius": 150.0, "max_aps": 2,
                    "min_gain": None},
    "training": {"enabled": False, "num_symbols": 2, "pilot_power": 1.0,
                 "mui_suppression": True, "coherence_symbols": 0},
    "allocation": {"objective": "sum_rate", "demands": 2, "min_rates": 0.0,
                   "mode": "exclusive", "refine_iterations": 1},
    "uplink": {"detector": "gmmse", "symbol_draws": 0,
               "constellation": "qpsk",
               "apmp": {"max_iterations": 8, "damping": 0.0, "tol": 1e-4,
                        "llr_clamp": 50.0}},
    "downlink": {"enabled": False, "p_max": 1.0, "p_max_element": None,
                 "precoder": "tmmse_ofdm", "reg": None, "ap_antennas": 1,
                 "secrecy_rho": None},
}

DETECTORS = ("gmmse", "gmmse_per_subcarrier", "lmmse_sliced", "lmmse_reduced",
             "local_equal", "local_mrc", "local_ls_linear", "local_ls_sqrt",
             "apmp", "none")
PRECODERS = ("tmmse_ofdm", "dist_mf", "dist_tzf", "dist_regmmse")

# wall_time stays in the records but out of the CSV: the export must be
# bit-identical for identical (scenario, seed)
CSV_COLUMNS = ["scenario", "hash", "seed", "trial", "ue", "detector",
               "precoder", "rate", "effective_rate", "sinr_analytic",
               "sinr_empirical", "ser", "nmse", "sum_rate", "dl_rate",
               "dl_sinr", "secrecy_leakage", "apmp_iterations", "audit_pass"]


def merge_scenario(overrides=None) -> dict:
    """Defaults overlaid with a (possibly partial) scenario dict."""
    def merge(base, over):
        out = dict(base)
        for key, val in (over or {}).items():
            if isinstance(val, dict) and isinstance(base.get(key), dict):
                out[key] = merge(base[key], val)
            else:
                out[key] = val
        return out
    # JSON round trip decouples the result from the shared defaults
    return json.loads(json.dumps(merge(DEFAULT_SCENARIO, overrides)))


def scenario_hash(scenario) -> str:
    blob = json.dumps(scenario, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def validate_scenario(scenario) -> list:
    """Structured list of config problems; empty means runnable."""
    errors = []
    sc = scenario

    def need(cond, msg):
        if not cond:
            errors.append(msg)

    need(isinstance(sc.get("trials"), int) and sc["trials"] >= 1,
         "trials must be an integer >= 1")
    topo = sc.get("topology", {})
    need(topo.get("num_aps", 0) >= 1, "topology.num_aps must be >= 1")
    need(topo.get("num_ues", 0) >= 1, "topology.num_ues must be >= 1")
    for key in ("max_ue_power", "max_ap_power", "noise_variance"):
        need(topo.get(key, 0) > 0, f"topology.{key} must be positive")
    ch = sc.get("channel", {})
    need(ch.get("pathloss") in ("double_slope", "triple_slope"),
         "channel.pathloss must be double_slope or triple_slope")
    need(ch.get("shadowing_std_db", 0) >= 0,
         "channel.shadowing_std_db must be nonnegative")
    N = sc.get("ofdm", {}).get("num_subcarriers", 0)
    need(N >= 1, "ofdm.num_subcarriers must be >= 1")
    need(ch.get("num_taps", 1) <= N, "channel.num_taps must not exceed N")
    assoc = sc.get("association", {})
    need(assoc.get("method") in ("distance", "large_scale"),
         "association.method must be distance or large_scale")
    if assoc.get("method") == "distance":
        need(assoc.get("radius", 0) > 0, "association.radius must be positive")
    else:
        need(assoc.get("max_aps") or assoc.get("min_gain") is not None,
             "association needs max_aps and/or min_gain")
    al = sc.get("allocation", {})
    need(al.get("objective") in ("sum_rate", "max_min"),
         "allocation.objective must be sum_rate or max_min")
    demands = al.get("demands", 0)
    if isinstance(demands, int):
        total = demands * topo.get("num_ues", 0)
    else:
        total = sum(demands)
    if al.get("mode", "exclusive") == "exclusive":
        need(total <= N, "allocation.demands exceed the subcarriers")
    need(sc.get("uplink", {}).get("detector") in DETECTORS,
         f"uplink.detector must be one of {DETECTORS}")
    dl = sc.get("downlink", {})
    if dl.get("enabled"):
        need(dl.get("precoder") in PRECODERS,
             f"downlink.precoder must be one of {PRECODERS}")
        need(dl.get("p_max", 0) > 0, "downlink.p_max must be positive")
        rho = dl.get("secrecy_rho")
        if rho is not None:
            need(0.0 <= rho <= 1.0, "downlink.secrecy_rho must lie in [0, 1]")
    tr = sc.get("training", {})
    if tr.get("enabled"):
        need(tr.get("num_symbols", 0) >= 1,
             "training.num_symbols must be >= 1")
        need(tr.get("pilot_power", 0) > 0,
             "training.pilot_power must be positive")
    return errors


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Counter-split stream: worker layout can never change the draws."""
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(trial,)))


def _build_channel_model(cfg) -> channel.LargeScaleModel:
    if cfg["pathloss"] == "double_slope":
        variant = channel.DoubleSlope(cfg["a"], cfg["b"], cfg["d_break"])
    else:
        variant = channel.TripleSlope(cfg["d0"], cfg["d1"])
    return channel.LargeScaleModel(variant, cfg["shadowing_std_db"])


def _associate(scenario, topo, gains):
    cfg = scenario["association"]
    if cfg["method"] == "distance":
        return topology.associate_distance(topo, cfg["radius"])
    return topology.associate_large_scale(gains, cfg.get("max_aps"),
                                          cfg.get("min_gain"))


def _estimate_channels(scenario, real, assoc, rng):
    cfg = scenario["training"]
    N = real.num_subcarriers
    taps = int(np.max(real.num_taps))
    plan = training.make_pilot_plan(
        real.gains.shape[1], N, cfg["num_symbols"], taps,
        pilot_power=cfg["pilot_power"])
    noise_var = scenario["topology"]["noise_variance"]
    obs = training.simulate_pilot_rx(plan, real, assoc, noise_var, rng)
    mode = "mui_suppress" if cfg["mui_suppression"] else "single"
    estimates = training.estimate_all(obs, plan, assoc, real, mode=mode,
                                      decay=scenario["channel"]["pdp_decay"])
    hf = training.estimated_subcarrier_gains(estimates, real, assoc)
    err = num = 0.0
    for (m, k), est in estimates.items():
        truth = np.sqrt(real.gains[m, k]) * real.taps[m, k, :len(est)]
        err += float(np.sum(np.abs(est - truth) ** 2))
        num += float(np.sum(np.abs(truth) ** 2))
    nmse = err / num if num > 0 else np.nan
    return hf, nmse


def _detect_uplink(scenario, scene, assoc, gains, rng):
    """Analytic/empirical SINR, per-UE rates, and SER for the configured
    detector; rates always come from the analytic symbol SINRs."""
    cfg = scenario["uplink"]
    name = cfg["detector"]
    K = scene.num_ues
    draws = int(cfg["symbol_draws"])
    points_name = cfg["constellation"]
    pts = CONSTELLATIONS[points_name]
    out = {"analytic": [np.full(len(scene.subcarriers[k]), np.nan)
                        for k in range(K)],
           "empirical": [np.nan] * K, "ser": [np.nan] * K,
           "apmp_iterations": np.nan}

    if name == "none":
        out["rates"] = np.zeros(K)
        return out

    if name in ("gmmse", "gmmse_per_subcarrier", "lmmse_sliced",
                "lmmse_reduced"):
        if name == "gmmse":
            weights = uplink.gmmse_weights(scene)
        elif name == "gmmse_per_subcarrier":
            weights = uplink.gmmse_per_subcarrier(scene)
        elif name == "lmmse_sliced":
            weights = uplink.lmmse_column_sliced(scene, assoc)
        else:
            weights = [uplink.lmmse_reduced(scene, assoc, k)
                       if assoc.ap_sets[k] and len(scene.subcarriers[k])
                       else np.zeros((scene.num_aps * scene.num_subcarriers,
                                      len(scene.subcarriers[k])))
                       for k in range(K)]
        for k in range(K):
            if len(scene.subcarriers[k]) and np.any(weights[k]):
                out["analytic"][k] = uplink.weight_output_sinr(
                    scene, k, weights[k])
        if draws > 0:
            indices, y = uplink.simulate_uplink(scene, draws, rng, points_name)
            for k in range(K):
                if not len(scene.subcarriers[k]) or not np.any(weights[k]):
                    continue
                z = y @ weights[k].conj()
                amp = np.sqrt(scene.power[k]) * np.einsum(
                    "ni,ni->i", weights[k].conj(),
                    uplink.stacked_channel(scene, k))
                err = z - pts[indices[k]] * amp
                emp = np.abs(amp) ** 2 / np.mean(np.abs(err) ** 2, axis=0)
                out["empirical"][k] = float(np.mean(emp))
                scale = np.where(np.abs(amp) > 0, amp, 1.0)
                decided = nearest_point(z / scale, pts)
                out["ser"][k] = symbol_error_rate(decided, indices[k])

    elif name.startswith("local_"):
        mode = {"local_equal": "equal", "local_mrc": "mrc",
                "local_ls_linear": "large_scale_linear",
                "local_ls_sqrt": "large_scale_sqrt"}[name]
        for k in range(K):
            if not assoc.ap_sets[k] or not len(scene.subcarriers[k]):
                continue
            if mode in ("equal", "mrc"):
                lambdas = uplink.combining_lambdas(scene, assoc, k, mode)
            else:
                g = np.array([gains[m, k] for m in assoc.ap_sets[k]])
                if mode == "large_scale_sqrt":
                    g = np.sqrt(g)
                w = g / g.sum()
                lambdas = {m: np.full(len(scene.subcarriers[k]), wi,
                                      dtype=complex)
                           for m, wi in zip(assoc.ap_sets[k], w)}
            out["analytic"][k] = uplink.combined_sinr(scene, assoc, k, lambdas)
        if draws > 0:
            indices, y = uplink.simulate_uplink(scene, draws, rng, points_name)
            M, N = scene.num_aps, scene.num_subcarriers
            for k in range(K):
                if not assoc.ap_sets[k] or not len(scene.subcarriers[k]):
                    continue
                stats = (uplink.local_combining_stats(scene, assoc, k)
                         if mode == "mrc" else None)
                gk = {m: gains[m, k] for m in assoc.ap_sets[k]}
                z = np.empty((draws, len(scene.subcarriers[k])), dtype=complex)
                for u in range(draws):
                    zm = {m: uplink.local_ap_estimate(
                              scene, assoc, y[u, m * N:(m + 1) * N], m, k)
                          for m in assoc.ap_sets[k]}
                    kw = ({"stats": stats} if mode == "mrc"
                          else {"gains": gk} if mode.startswith("large") else {})
                    z[u] = uplink.cpu_combine(zm, mode, **kw)
                x = pts[indices[k]]
                amp = np.mean(z * x.conj(), axis=0)
                err = z - amp * x
                emp = np.abs(amp) ** 2 / np.mean(np.abs(err) ** 2, axis=0)
                out["empirical"][k] = float(np.mean(emp))
                decided = nearest_point(z / np.where(np.abs(amp) > 0, amp, 1.0), pts)
                out["ser"][k] = symbol_error_rate(decided, indices[k])

    elif name == "apmp":
        acfg = cfg["apmp"]
        config = apmp.ApmpConfig(max_iterations=acfg["max_iterations"],
                                 tol=acfg["tol"], damping=acfg["damping"],
                                 points=points_name,
                                 llr_clamp=acfg["llr_clamp"])
        ser_counts = np.zeros(K)
        ser_draws = max(draws, 1)
        iters = []
        M, N = scene.num_aps, scene.num_subcarriers
        indices, ys = uplink.simulate_uplink(scene, ser_draws, rng, points_name)
        for u in range(ser_draws):
            res = apmp.apmp_detect(scene, assoc, ys[u].reshape(M, N), config)
            iters.append(res.iterations)
            for k in range(K):
                if res.decisions[k] is None:
                    continue
                ser_counts[k] += np.mean(res.decisions[k] != indices[k][u])
        out["ser"] = list(ser_counts / ser_draws)
        out["apmp_iterations"] = float(np.mean(iters))
        # analytic MMSE SINR reported as the rate proxy for APMP trials
        for k in range(K):
            if len(scene.subcarriers[k]):
                out["analytic"][k] = np.asarray(
                    uplink.uplink_sinr_all(scene)[k])
    else:
        raise ValueError(f"unknown detector {name!r}")

    out["rates"] = np.array([
        float(np.nansum(np.log2(1.0 + np.nan_to_num(out["analytic"][k]))))
        for k in range(K)])
    return out


def _run_downlink(scenario, real, assoc, plan, rng):
    cfg = scenario["downlink"]
    noise_var = scenario["topology"]["noise_variance"]
    K = real.gains.shape[1]
    result = {"dl_rate": np.full(K, np.nan), "dl_sinr": np.full(K, np.nan),
              "leakage": np.nan}
    if cfg["precoder"] == "tmmse_ofdm":
        dl_plan = alloc.successive_optimize(
            real.freq, assoc, scenario["allocation"]["demands"],
            objective=scenario["allocation"]["objective"], direction="dl",
            noise_var=noise_var, p_max=cfg["p_max"],
            p_max_element=cfg["p_max_element"],
            min_rates=scenario["allocation"]["min_rates"],
            mode=scenario["allocation"]["mode"])
        precoders = downlink.tmmse_central_ofdm(
            real.freq, dl_plan.subcarriers, noise_var, dl_plan.dl_power,
            assoc=assoc)
        sinrs = downlink.dl_sinr_ofdm(real.freq, precoders,
                                      dl_plan.subcarriers, dl_plan.a0,
                                      noise_var)
        for k in range(K):
            result["dl_sinr"][k] = (float(np.mean(sinrs[k]))
                                    if len(sinrs[k]) else 0.0)
            result["dl_rate"][k] = float(np.sum(np.log2(1 + np.asarray(sinrs[k]))))
        result["plan"] = dl_plan
        rho = cfg["secrecy_rho"]
        if rho is not None:
            h0 = real.freq[:, :, 0]
            M = h0.shape[0]
            if M > K:
                p_i = downlink.artificial_noise_direction(h0, rng)
                result["leakage"] = float(np.max(np.abs(h0.T @ p_i)))
        return result
    # distributed precoding: subcarrier-0 snapshot, equal per-AP power split
    h0 = real.freq[:, :, 0]
    U = int(cfg["ap_antennas"])
    if U > 1:
        h = (rng.standard_normal((h0.shape[0], U, K))
             + 1j * rng.standard_normal((h0.shape[0], U, K))) / np.sqrt(2)
        h *= np.sqrt(real.gains)[:, None, :]
    else:
        h = h0[:, None, :]
    method = {"dist_mf": "mf", "dist_tzf": "tzf",
              "dist_regmmse": "regmmse"}[cfg["precoder"]]
    reg = cfg["reg"] if cfg["reg"] is not None else noise_var
    dirs = downlink.distributed_directions(h, assoc, method=method, reg=reg)
    powers = np.zeros((h.shape[0], K))
    for m in range(h.shape[0]):
        served = assoc.ue_sets[m]
        if served:
            powers[m, list(served)] = cfg["p_max"] / len(served)
    for k in range(K):
        split = downlink.received_power_split(h, assoc, dirs, powers, k)
        denom = split["co_associated"] + split["cross_ap"] + noise_var
        result["dl_sinr"][k] = split["desired"] / denom
        result["dl_rate"][k] = float(np.log2(1 + result["dl_sinr"][k]))
    return result


def run_trial(scenario, trial: int) -> list:
    """One full pipeline pass; returns one record dict per UE."""
    rng = trial_rng(scenario["seed"], trial)
    t0 = time.perf_counter()
    topo_cfg = scenario["topology"]
    topo = topology.generate_topology(
        topo_cfg["num_aps"], topo_cfg["num_ues"], topo_cfg["area_size"],
        topo_cfg["layout"], rng,
        ap_height=topo_cfg["ap_height"], ue_height=topo_cfg["ue_height"],
        carrier_freq_mhz=topo_cfg["carrier_freq_mhz"],
        max_ue_power=topo_cfg["max_ue_power"],
        max_ap_power=topo_cfg["max_ap_power"],
        noise_variance=topo_cfg["noise_variance"])
    model = _build_channel_model(scenario["channel"])
    N = scenario["ofdm"]["num_subcarriers"]
    real = channel.realize_channels(topo, model, N,
                                    scenario["channel"]["num_taps"], rng,
                                    scenario["channel"]["pdp_decay"])
    assoc = _associate(scenario, topo, real.gains)

    nmse = np.nan
    hf = real.freq
    if scenario["training"]["enabled"]:
        hf, nmse = _estimate_channels(scenario, real, assoc, rng)

    # plan with the global evaluator regardless of detector, so that
    # detector comparisons on a shared seed run identical allocations
    gamma_u = topo.max_ue_power / topo.noise_variance
    plan = alloc.successive_optimize(
        hf, assoc, scenario["allocation"]["demands"],
        objective=scenario["allocation"]["objective"], direction="ul",
        gamma_u=gamma_u, detector="gmmse",
        min_rates=scenario["allocation"]["min_rates"],
        mode=scenario["allocation"]["mode"],
        refine_iterations=scenario["allocation"]["refine_iterations"])

    scene = uplink.UplinkScene(freq=hf, subcarriers=plan.subcarriers,
                               power=plan.ul_power, gamma_u=gamma_u)
    det = _detect_uplink(scenario, scene, assoc, real.gains, rng)

    dl = {"dl_rate": np.full(topo.num_ues, np.nan),
          "dl_sinr": np.full(topo.num_ues, np.nan), "leakage": np.nan}
    audit_pass = plan.audit.get("pass", False)
    if scenario["downlink"]["enabled"]:
        dl = _run_downlink(scenario, real, assoc, plan, rng)
        if "plan" in dl:
            audit_pass = audit_pass and dl["plan"].audit.get("pass", False)

    overhead = 0.0
    tr = scenario["training"]
    if tr["enabled"] and tr["coherence_symbols"]:
        overhead = min(tr["num_symbols"] / tr["coherence_symbols"], 1.0)

    wall = time.perf_counter() - t0
    sum_rate = float(np.sum(det["rates"]))
    records = []
    for k in range(topo.num_ues):
        analytic = det["analytic"][k]
        records.append({
            "scenario": scenario["name"],
            "hash": scenario_hash(scenario),
            "seed": scenario["seed"],
            "trial": trial,
            "ue": k,
            "detector": scenario["uplink"]["detector"],
            "precoder": (scenario["downlink"]["precoder"]
                         if scenario["downlink"]["enabled"] else "none"),
            "rate": float(det["rates"][k]),
            "effective_rate": float(det["rates"][k] * (1.0 - overhead)),
            "sinr_analytic": (float(np.mean(analytic))
                              if np.size(analytic) and np.all(np.isfinite(analytic))
                              else np.nan),
            "sinr_empirical": float(det["empirical"][k]),
            "ser": float(det["ser"][k]),
            "nmse": float(nmse),
            "sum_rate": sum_rate,
            "dl_rate": float(dl["dl_rate"][k]),
            "dl_sinr": float(dl["dl_sinr"][k]),
            "secrecy_leakage": float(dl["leakage"]),
            "apmp_iterations": float(det["apmp_iterations"]),
            "audit_pass": bool(audit_pass),
            "wall_time": wall,
        })
    return records


def run_scenario(scenario=None, workers: int = 1) -> dict:
    """Run all trials and aggregate; raises ValueError on invalid config."""
    scenario = merge_scenario(scenario)
    errors = validate_scenario(scenario)
    if errors:
        raise ValueError("invalid scenario: " + "; ".join(errors))
    trials = range(scenario["trials"])
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(lambda t: run_trial(scenario, t), trials))
    else:
        per_trial = [run_trial(scenario, t) for t in trials]
    records = [rec for block in per_trial for rec in block]
    records.sort(key=lambda r: (r["trial"], r["ue"]))
    return {"scenario": scenario, "records": records,
            "aggregate": aggregate(records)}


def aggregate(records) -> dict:
    """Mean and 95% confidence interval of the headline metrics."""
    out = {}
    trials = sorted({r["trial"] for r in records})
    per_trial_sum = [next(r["sum_rate"] for r in records if r["trial"] == t)
                     for t in trials]
    out["sum_rate"] = _mean_ci(per_trial_sum)
    for key in ("rate", "ser", "sinr_analytic", "sinr_empirical", "nmse",
                "dl_rate"):
        vals = [r[key] for r in records if np.isfinite(r[key])]
        if vals:
            out[key] = _mean_ci(vals)
    out["audit_pass_fraction"] = float(np.mean([r["audit_pass"]
                                                for r in records]))
    return out


def _mean_ci(values) -> dict:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    if values.size > 1:
        half = 1.96 * values.std(ddof=1) / np.sqrt(values.size)
    else:
        half = 0.0
    return {"mean": mean, "ci_lo": mean - half, "ci_hi": mean + half,
            "count": int(values.size)}


def set_by_path(scenario: dict, path: str, value):
    """Set a nested scenario field addressed as 'section.key'."""
    keys = path.split(".")
    node = scenario
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ValueError(f"bad parameter path {path!r}; sections: "
                             + ", ".join(sorted(scenario)))
        node = node[key]
    if not isinstance(node, dict) or keys[-1] not in node:
        valid = sorted(node) if isinstance(node, dict) else []
        raise ValueError(f"bad parameter path {path!r}; valid leaves: "
                         + ", ".join(valid))
    node[keys[-1]] = value


def sweep(scenario, path: str, values, workers: int = 1,
          common_random: bool = True) -> list:
    """Independent runs per parameter value.

    With ``common_random`` every point reuses the master seed (paired
    comparisons); otherwise each point derives its own seed.
    """
    scenario = merge_scenario(scenario)
    out = []
    for i, value in enumerate(values):
        point = json.loads(json.dumps(scenario))
        set_by_path(point, path, value)
        if not common_random:
            point["seed"] = int(scenario["seed"]) + 7919 * (i + 1)
        out.append({"value": value, "result": run_scenario(point, workers)})
    return out


# ---------------------------------------------------------------------------
# export

def results_to_csv(result) -> str:
    """Fixed-schema CSV; floats carry 9 significant digits."""
    records = result["records"]
    if not records:
        raise ValueError("no records to export")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        row = []
        for col in CSV_COLUMNS:
            val = rec[col]
            if isinstance(val, float):
                row.append(f"{val:.9g}")
            else:
                row.append(val)
        writer.writerow(row)
    return buf.getvalue()


def results_to_table(result) -> str:
    """Human-readable aggregate summary."""
    agg = result["aggregate"]
    lines = [f"scenario: {result['scenario']['name']} "
             f"(hash {scenario_hash(result['scenario'])}, "
             f"seed {result['scenario']['seed']}, "
             f"trials {result['scenario']['trials']})"]
    for key, stat in agg.items():
        if isinstance(stat, dict):
            lines.append(f"  {key:16s} mean {stat['mean']:.6g}   "
                         f"95% CI [{stat['ci_lo']:.6g}, {stat['ci_hi']:.6g}]"
                         f"   n={stat['count']}")
        else:
            lines.append(f"  {key:16s} {stat:.6g}")
    return "\n".join(lines)


def sweep_to_plot_data(sweep_result, metric: str = "sum_rate") -> list:
    """(x, mean, ci_lo, ci_hi) rows for a swept metric."""
    if not sweep_result:
        raise ValueError("empty sweep")
    rows = []
    for point in sweep_result:
        stat = point["result"]["aggregate"][metric]
        rows.append((point["value"], stat["mean"], stat["ci_lo"],
                     stat["ci_hi"]))
    return rows
