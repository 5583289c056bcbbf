"""Compare the two devices statistically: descriptive summaries, a
paired t-test on matched slots, ANOVA over device x temperature cells,
and the pooled deviation regression.
"""

from collections import defaultdict
from pathlib import Path

from metrotwin import (
    DeviceKind,
    anova_oneway,
    build_design,
    default_part_catalog,
    descriptive_stats,
    generate_campaign,
    ols_fit,
    paired_t_test,
    regression_design,
)

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)

catalog = default_part_catalog()
records = generate_campaign(build_design(catalog, seed=11), seed=11)

print("Per-device deviation statistics (mm):")
for device in DeviceKind:
    devs = [r.deviation for r in records if r.device is device]
    s = descriptive_stats(devs)
    print(f"  {device.value:8s} n={s.n}  mean={s.mean:+.4f}  std={s.sample_std:.4f}  "
          f"range={s.range:.4f}")
    print(f"           95% CI of mean [{s.ci95[0]:+.4f}, {s.ci95[1]:+.4f}]  "
          f"95% PI for one value [{s.pi95[0]:+.4f}, {s.pi95[1]:+.4f}]")

# Pair CMM and arm measurements of the same (part, temperature, repetition)
by_slot = defaultdict(dict)
for r in records:
    key = (r.part_id, round(r.temperature / 10) * 10, r.repetition_index)
    by_slot[key][r.device] = r.deviation
pairs = [(v[DeviceKind.CMM], v[DeviceKind.FARO_ARM])
         for v in by_slot.values() if len(v) == 2]
cmm, faro = zip(*pairs)
t = paired_t_test(cmm, faro)
print(f"\npaired t-test CMM vs arm on {len(pairs)} matched slots: "
      f"t={t.t_stat:.2f}, df={t.df}, p={t.p_value:.2e}")

groups = defaultdict(list)
for r in records:
    setpoint = 20 if r.temperature < 25 else 30
    groups[(r.device.value, setpoint)].append(r.deviation)
anova = anova_oneway(list(groups.values()))
print(f"one-way ANOVA over {len(groups)} device x temperature cells: "
      f"F={anova.f_stat:.1f} (df {anova.df_between}, {anova.df_within}), "
      f"p={anova.p_value:.2e}")

X, y = regression_design(records)
fit = ols_fit(X, y)
print(f"\npooled deviation regression (n={fit.n}, R^2={fit.r_squared:.3f}):")
print(f"  {'term':12s} {'coef (mm)':>12s} {'std err':>10s} {'p':>10s}")
for i, term in enumerate(fit.terms):
    print(f"  {term:12s} {fit.coefficients[i]:12.5f} {fit.std_errors[i]:10.5f} "
          f"{fit.p_values[i]:10.2e}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for device, color in ((DeviceKind.CMM, "tab:blue"), (DeviceKind.FARO_ARM, "tab:orange")):
        devs = [r.deviation * 1000 for r in records if r.device is device]
        ax1.hist(devs, bins=24, alpha=0.6, label=device.value, color=color)
        temps = [r.temperature for r in records if r.device is device]
        ax2.scatter(temps, devs, s=10, alpha=0.5, label=device.value, color=color)
    ax1.set_xlabel("deviation (um)")
    ax1.set_ylabel("count")
    ax1.legend()
    ax1.set_title("deviation spread by device")
    ax2.set_xlabel("temperature (degC)")
    ax2.set_ylabel("deviation (um)")
    ax2.set_title("temperature effect")
    fig.tight_layout()
    fig.savefig(out_dir / "device_statistics.png", dpi=120)
    print(f"\nsaved {out_dir / 'device_statistics.png'}")
except ImportError:
    print("\nmatplotlib not installed; skipping the figure")
