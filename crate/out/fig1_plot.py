import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

CSV = "out/fig1.csv"
OUT = CSV.rsplit(".", 1)[0] + ".png"
SERIES = [
    (8, 1000000),
    (10, 1000000),
    (12, 1000000),
    (14, 1000000),
    (0, 1000000),
]

rows = list(csv.DictReader(open(CSV)))

fig, ax = plt.subplots(figsize=(6, 4.5))
for d, l in SERIES:
    pts = [r for r in rows if int(r["D"]) == d and int(r["l"]) == l]
    x = [float(r["distance_km"]) for r in pts]
    y = [float(r["key_rate"]) for r in pts]
    name = "continuous" if d == 0 else "D=%d" % d
    ax.semilogy(x, y, label="%s, l=%g" % (name, l))

if SERIES:
    seen = {}
    for r in rows:
        seen[float(r["distance_km"])] = float(r["plob"])
    x = sorted(seen)
    ax.semilogy(x, [seen[v] for v in x], "k--", label="PLOB")

ax.set_yscale("log")
ax.set_xlabel("distance (km)")
ax.set_ylabel("key rate (bits per round)")
if SERIES:
    ax.legend()
fig.tight_layout()
fig.savefig(OUT, dpi=150)
print(OUT)
