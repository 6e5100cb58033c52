"""Command-line interface: ``qcmdpc <command> ...``."""

from __future__ import annotations

import csv
import functools
import io
import json
import logging
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import attack, harness, keygen, parallel, serialize
from .codec import DecodeFailure, decrypt, encrypt
from .minsum import DecoderConfig, FixedPointSpec, ScalarCSD, csd_candidates


def _parse_params(text: str) -> tuple[int, int, int, int]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise click.BadParameter(f"expected n0,r,w,t integers, got {text!r}") from None
    if len(vals) != 4:
        raise click.BadParameter(f"expected four values n0,r,w,t, got {text!r}")
    return vals


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from None


def _params(ctx_params: str, L: int) -> keygen.CodeParams:
    n0, r, w, t = _parse_params(ctx_params)
    return keygen.CodeParams(n0, r, w, t, L)


def _emit(report: dict, out: str | None, fmt: str):
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        rows = report.get("rows")
        if rows:
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        else:
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["key", "value"])
            for k, v in _flatten(report):
                writer.writerow([k, v])
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _flatten(d, prefix=""):
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list):
            yield key, json.dumps(v)
        else:
            yield key, v


def _fail_cleanly(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, OSError, OverflowError) as exc:
            raise click.ClickException(str(exc)) from None
    return wrapper


def decoder_options(fn):
    opts = [
        click.option("--schedule", type=click.Choice(["layered", "sliced"]), default="layered", show_default=True),
        click.option("--arith", type=click.Choice(["fixed", "float"]), default="fixed", show_default=True),
        click.option("--q", "q", type=int, default=4, show_default=True, help="v2c/c2v magnitude bits"),
        click.option("--C", "C", type=int, default=9, show_default=True, help="channel magnitude"),
        click.option("--alpha", default="+2^-2-2^-5", show_default=True, help="CSD scalar literal"),
        click.option("--frac-bits", type=int, default=2, show_default=True),
        click.option("--rounding", type=click.Choice(["round", "truncate"]), default="round", show_default=True),
        click.option("--layer-rows", type=int, default=1, show_default=True),
        click.option("--imax", type=int, default=30, show_default=True),
    ]
    for o in reversed(opts):
        fn = o(fn)
    return fn


def _decoder(kw) -> DecoderConfig:
    try:
        alpha = ScalarCSD.parse(kw.pop("alpha"))
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--alpha") from None
    spec = FixedPointSpec(q=kw.pop("q"), C=kw.pop("C"), alpha=alpha, f=kw.pop("frac_bits"),
                          rounding=kw.pop("rounding"))
    return DecoderConfig(schedule=kw.pop("schedule"), arithmetic=kw.pop("arith"), precision=spec,
                         layer_rows=kw.pop("layer_rows"), imax=kw.pop("imax"))


def _read_private(path: str) -> keygen.PrivateKey:
    key = serialize.deserialize_key(Path(path).read_text())
    if not isinstance(key, keygen.PrivateKey):
        raise click.ClickException(f"{path} does not hold a private key")
    return key


common_out = [
    click.option("--out", type=click.Path(dir_okay=False), default=None, help="output file (default stdout)"),
    click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True),
]


def output_options(fn):
    for o in reversed(common_out):
        fn = o(fn)
    return fn


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """QC-MDPC McEliece with fixed-point row-layered Min-Sum decoding."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command("keygen")
@click.option("--params", required=True, help="n0,r,w,t")
@click.option("--L", "L", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--method", type=click.Choice(["rejection", "gaps"]), default="rejection", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="private key file")
@click.option("--pub", type=click.Path(dir_okay=False), default=None, help="public key file (default OUT.pub)")
@_fail_cleanly
def keygen_cmd(params, L, seed, method, out, pub):
    """Generate a key pair constrained by L."""
    sk, pk = keygen.generate_keypair(_params(params, L), np.random.default_rng(seed), method)
    Path(out).write_text(serialize.serialize_key(sk))
    Path(pub or out + ".pub").write_text(serialize.serialize_key(pk))


@main.command("encrypt")
@click.option("--pub", "pub_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--message", type=click.Path(exists=True, dir_okay=False), default=None,
              help="plaintext file; a random plaintext is drawn when omitted")
@click.option("--message-out", type=click.Path(dir_okay=False), default=None,
              help="where to write the random plaintext")
@click.option("--t", "t", type=int, default=None, help="error weight (default from key)")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_fail_cleanly
def encrypt_cmd(pub_path, message, message_out, t, seed, out):
    """Encrypt a plaintext under a public key."""
    pk = serialize.deserialize_key(Path(pub_path).read_text())
    if not isinstance(pk, keygen.PublicKey):
        raise click.ClickException(f"{pub_path} does not hold a public key")
    rng = np.random.default_rng(seed)
    if message:
        m = serialize.deserialize_bits(Path(message).read_text(), "plaintext")
    else:
        m = rng.integers(0, 2, pk.params.k, dtype=np.uint8)
        if message_out:
            Path(message_out).write_text(serialize.serialize_bits(m, "plaintext"))
    Path(out).write_text(serialize.serialize_ct(encrypt(m, pk, rng, t)))


@main.command("decrypt")
@click.option("--key", "key_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@decoder_options
@_fail_cleanly
def decrypt_cmd(key_path, in_path, out, **kw):
    """Decrypt a ciphertext; exits with status 2 on decoding failure."""
    sk = _read_private(key_path)
    cfg = _decoder(kw)
    x = serialize.deserialize_ct(Path(in_path).read_text())
    try:
        m = decrypt(x, sk, cfg)
    except DecodeFailure as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    Path(out).write_text(serialize.serialize_bits(m, "plaintext"))


def _campaign(params, L, trials, seed, t, fixed_key, workers, kw) -> harness.CampaignConfig:
    sk = _read_private(fixed_key) if fixed_key else None
    p = _params(params, L)
    return harness.CampaignConfig(params=p, decoder=_decoder(kw), trials=trials, master_seed=seed,
                                  t_override=t, fixed_key=sk, workers=workers)


campaign_opts = [
    click.option("--params", default="2,4801,45,84", show_default=True, help="n0,r,w,t"),
    click.option("--L", "L", type=int, default=1, show_default=True, help="key constraint"),
    click.option("--trials", type=int, default=1000, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--t", "t", type=int, default=None, help="error weight override"),
    click.option("--fixed-key", type=click.Path(exists=True, dir_okay=False), default=None,
                 help="decode every trial with this private key"),
    click.option("--workers", type=int, default=1, show_default=True),
]


def campaign_options(fn):
    for o in reversed(campaign_opts):
        fn = o(fn)
    return fn


@main.command("fer")
@campaign_options
@decoder_options
@output_options
@click.option("--timing", is_flag=True, help="include wall-clock time (breaks byte-identical replays)")
@_fail_cleanly
def fer_cmd(params, L, trials, seed, t, fixed_key, workers, out, fmt, timing, **kw):
    """Frame error rate and iteration statistics."""
    cfg = _campaign(params, L, trials, seed, t, fixed_key, workers, kw)
    _emit(harness.run_fer(cfg).to_dict(include_timing=timing), out, fmt)


@main.command("calibrate")
@campaign_options
@decoder_options
@output_options
@click.option("--candidates", default=None, help="semicolon-separated CSD literals (default: all)")
@_fail_cleanly
def calibrate_cmd(params, L, trials, seed, t, fixed_key, workers, out, fmt, candidates, **kw):
    """Pick the scalar with the lowest FER for the chosen schedule."""
    cfg = _campaign(params, L, trials, seed, t, fixed_key, workers, kw)
    cands = ([ScalarCSD.parse(c) for c in candidates.split(";")] if candidates else csd_candidates())
    res = harness.calibrate_scalar(cfg, cands)
    d = res.to_dict()
    if fmt == "csv":
        d = {"rows": d["candidates"]}
    _emit(d, out, fmt)


@main.command("hwmodel")
@click.option("--params", default="2,4801,45,84", show_default=True, help="n0,r,w,t")
@click.option("--L", "Ls", default="2", show_default=True, help="comma-separated parallelism values")
@click.option("--q", "q", type=int, default=4, show_default=True)
@click.option("--alpha", default="+2^-2-2^-5", show_default=True)
@click.option("--frac-bits", type=int, default=2, show_default=True)
@click.option("--apost-width", type=int, default=None, help="override stored a-posteriori width")
@output_options
@_fail_cleanly
def hwmodel_cmd(params, Ls, q, alpha, frac_bits, apost_width, out, fmt):
    """Memory (RAM I/M/S/U/T) and clock-cycle model of the L-parallel decoder."""
    n0, r, w, t = _parse_params(params)
    spec = FixedPointSpec(q=q, C=0, alpha=ScalarCSD.parse(alpha), f=frac_bits)
    width = apost_width or spec.apost_width(w)
    rows = []
    for L in _parse_int_list(Ls):
        p = keygen.CodeParams(n0, r, w, t, L)
        mem = parallel.memory_report(p, L, q, width)
        cyc = parallel.cycle_report(p, L)
        row = {"L": L, "apost_width": width}
        row.update({f"ram_{b.name}": b.total_bits for b in mem.rams})
        row.update(total_bits=mem.total_bits, clocks_per_iteration_worst=cyc.clocks_per_iteration_worst,
                   speedup=float(cyc.speedup_vs_serial))
        rows.append(row)
    _emit({"rows": rows}, out, fmt)


@main.command("divide")
@click.option("--key", "key_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--params", default="2,4801,45,84", show_default=True, help="n0,r,w,t (when generating)")
@click.option("--L", "L", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--layers", "show_layers", type=int, default=2, show_default=True,
              help="number of leading layers to list")
@output_options
@_fail_cleanly
def divide_cmd(key_path, params, L, seed, show_layers, out, fmt):
    """Dynamic identity-block division of H."""
    if key_path:
        sk = _read_private(key_path)
    else:
        sk, _ = keygen.generate_keypair(_params(params, L), np.random.default_rng(seed), "gaps")
    sched = parallel.dynamic_division(sk, L)
    report = {"L": L, "r": sched.r, "n0": sched.n0, "w": sched.w, "num_layers": sched.num_layers,
              "last_layer_rows": sched.last_layer_rows, "blocks_per_layer": sched.blocks_per_layer,
              "valid": parallel.validate_layers(sched),
              "nonzeros_per_full_block": L,
              "layers": [sched.layer(l) for l in range(min(show_layers, sched.num_layers))]}
    _emit(report, out, fmt)


@main.command("keyspace")
@click.option("--params", default="2,4801,45,84", show_default=True, help="n0,r,w,t")
@click.option("--L", "Ls", default="1,2,4,8,16,32", show_default=True)
@click.option("--samples", type=int, default=10 ** 6, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@output_options
@_fail_cleanly
def keyspace_cmd(params, Ls, samples, seed, out, fmt):
    """Fraction of random supports meeting the constraint, and the key count."""
    n0, r, w, _ = _parse_params(params)
    gaps = keygen.sample_min_gaps(r, w, samples, np.random.default_rng(seed))
    rows = []
    for L in _parse_int_list(Ls):
        est = keygen.keyspace_from_min_gaps(r, w, L, gaps)
        rows.append({"L": L, "samples": est.samples, "passed": est.passed, "fraction": est.fraction,
                     "wilson95_low": est.interval[0], "wilson95_high": est.interval[1],
                     "log2_keys": est.log2_keys(n0),
                     "exact_fraction": keygen.exact_constrained_count(r, w, L) / math.comb(r, w)})
    _emit({"rows": rows}, out, fmt)


@main.command("blockstats")
@click.option("--params", default="2,4801,45,84", show_default=True, help="n0,r,w,t")
@click.option("--L", "Ls", default="2,4,8,16,32", show_default=True)
@click.option("--samples", type=int, default=10 ** 4, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@output_options
@_fail_cleanly
def blockstats_cmd(params, Ls, samples, seed, out, fmt):
    """Mean nonzeros per nonzero block: fixed division versus dynamic division."""
    _, r, w, _ = _parse_params(params)
    rows = []
    for L in _parse_int_list(Ls):
        st = parallel.fixed_division_stats(samples, r, w, L, np.random.default_rng([seed, L]))
        rows.append({"L": L, "samples": samples, "fixed_mean": st.mean, "dynamic": L})
    _emit({"rows": rows}, out, fmt)


@main.command("gjs")
@click.option("--key", "key_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--params", default="2,4801,45,84", show_default=True, help="n0,r,w,t (when generating)")
@click.option("--L", "L", type=int, default=1, show_default=True)
@click.option("--d-range", default="1:20", show_default=True, help="first:last distance, inclusive")
@click.option("--trials-per-d", type=int, default=100, show_default=True)
@click.option("--t", "t", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@decoder_options
@output_options
@_fail_cleanly
def gjs_cmd(key_path, params, L, d_range, trials_per_d, t, seed, out, fmt, **kw):
    """Distance spectrum of h_0 and decoding failures per crafted distance."""
    if key_path:
        sk = _read_private(key_path)
    else:
        sk, _ = keygen.generate_keypair(_params(params, L), np.random.default_rng(seed))
    lo, _, hi = d_range.partition(":")
    try:
        ds = range(int(lo), int(hi or lo) + 1)
    except ValueError:
        raise click.BadParameter(f"expected first:last, got {d_range!r}", param_hint="--d-range") from None
    spec = attack.distance_spectrum(sk.supports[0])
    table = attack.fer_vs_distance(sk, _decoder(kw), ds, trials_per_d, seed, t)
    rows = [{"d": r.d, "failures": r.failures, "trials": r.trials, "in_spectrum": r.d in spec}
            for r in table]
    counts = attack.gjs_trial_counts(sk.params.r, sk.params.L, trials_per_d)
    report = {"rows": rows, "spectrum": {str(d): c for d, c in spec.counts.items()},
              "trial_counts": {"baseline": counts.baseline, "constrained": counts.constrained,
                               "reduction_fraction": float(counts.reduction_fraction)}}
    _emit(report, out, fmt)


if __name__ == "__main__":
    main()
