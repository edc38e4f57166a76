#!/usr/bin/env python3
"""Render the CSV outputs of `wlsbx` as PNG figures.

usage: plot.py OUT_DIR   (needs matplotlib)

Looks for learning_trace.csv, sweep.csv, oracle.csv and monitoring.csv in
OUT_DIR and writes one PNG next to each file it finds.
"""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def learning(path):
    power, thr = defaultdict(list), defaultdict(list)
    for r in rows(path):
        power[r["bss_id"]].append(float(r["power_dbm"]))
        thr[r["bss_id"]].append(float(r["thr_mbps"]))
    fig, (a, b) = plt.subplots(2, 1, sharex=True)
    for bss in power:
        a.plot(power[bss], label=f"BSS {bss}")
        b.plot(thr[bss], label=f"BSS {bss}")
    a.set_ylabel("tx power (dBm)")
    b.set_ylabel("throughput (Mbps)")
    b.set_xlabel("iteration")
    a.legend()
    return fig


def sweep(path):
    rs = rows(path)
    d = [float(r["duration_s"]) for r in rs]
    fig, a = plt.subplots()
    a.plot(d, [float(r["cov"]) for r in rs], "o-", color="tab:blue")
    a.set_xscale("log")
    a.set_xlabel("simulated duration (s)")
    a.set_ylabel("throughput CoV", color="tab:blue")
    b = a.twinx()
    b.plot(d, [float(r["mean_exec_ms"]) for r in rs], "s--", color="tab:red")
    b.set_ylabel("execution time (ms)", color="tab:red")
    return fig


def oracle(path):
    rs = rows(path)
    fig, a = plt.subplots(figsize=(10, 4))
    a.bar(range(len(rs)), [float(r["mean_aggregate_mbps"]) for r in rs])
    a.set_xticks(range(len(rs)), [r["powers"] for r in rs], rotation=90, fontsize=7)
    a.set_ylabel("aggregate throughput (Mbps)")
    fig.tight_layout()
    return fig


def monitoring(path):
    rs = rows(path)
    x = range(len(rs))
    fig, a = plt.subplots()
    a.bar([i - 0.2 for i in x], [float(r["pre_mbps"]) for r in rs], 0.4, label="before")
    a.bar([i + 0.2 for i in x], [float(r["post_mbps"]) for r in rs], 0.4, label="after")
    a.set_xticks(list(x), [f"BSS {r['bss_id']}" for r in rs])
    a.set_ylabel("throughput (Mbps)")
    a.legend()
    return fig


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "out")
    for name, fn in [
        ("learning_trace.csv", learning),
        ("sweep.csv", sweep),
        ("oracle.csv", oracle),
        ("monitoring.csv", monitoring),
    ]:
        p = out / name
        if p.exists():
            fn(p).savefig(p.with_suffix(".png"), dpi=120)
            print("wrote", p.with_suffix(".png"))


if __name__ == "__main__":
    main()
