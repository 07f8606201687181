"""A small Monte-Carlo SNR sweep with CSV and SVG output.

Twenty trials per point keep this under a minute.  The bundled presets
(``nfupa sweep --config fig3_desk.cfg``) run the full 100-trial version.
"""
# %%
from pathlib import Path

from nfupa import ScenarioConfig, UpaGeometry, run_sweep
from nfupa.estimators import PcsblHyperParams
from nfupa.simulation import EstimatorSettings

out = Path(__file__).with_name("output")
geom = UpaGeometry(16, 16)
configs = [ScenarioConfig(geom, t_samples=128, snr_db=s, trials=20, rng_seed=7) for s in (0, 10, 20)]
settings = EstimatorSettings(pcsbl=PcsblHyperParams(eps=0.0, t_max=50))



def progress(done, total):
    if done % 10 == 0 or done == total:
        print(f"{done}/{total} trials")


res = run_sweep(configs, output_path=out / "snr_sweep", settings=settings, chart_axis="snr_db",
                progress=progress)

# %%
for p in res.summary:
    print(f"{p.estimator:>9} SNR {p.snr_db:4.0f} dB  NMSE {p.mean_nmse_db:6.2f} dB  "
          f"RT {p.relative_runtime:5.2f}")
print("wrote", res.trial_csv.name, res.summary_csv.name, *[c.name for c in res.charts])
