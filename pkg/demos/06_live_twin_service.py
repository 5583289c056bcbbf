"""Drive the HTTP service end to end: ingest, alerting, training,
what-if queries, and the report endpoint. Needs the `requests` package.
"""

import requests

from metrotwin import build_design, default_part_catalog, generate_campaign
from metrotwin.io import record_to_dict
from metrotwin.ml import RegressorKind, RegressorSpec
from metrotwin.runtime import TwinRuntime
from metrotwin.server import ServiceConfig, TwinService

catalog = default_part_catalog()
records = generate_campaign(build_design(catalog, seed=31), seed=31)

runtime = TwinRuntime(regressor_spec=RegressorSpec(
    kind=RegressorKind.ENSEMBLE,
    hyperparameters={"rf": {"n_trees": 24, "max_depth": 7},
                     "gb": {"n_rounds": 30, "depth": 3}},
    seed=0,
))
service = TwinService(runtime=runtime, config=ServiceConfig(port=0),
                      parts=catalog).start()
base = f"http://127.0.0.1:{service.port}"
print(f"service listening on {base}")

try:
    for rec in records:
        requests.post(f"{base}/measurements", json=record_to_dict(rec)).raise_for_status()
    print(f"ingested {len(records)} measurements")

    health = requests.get(f"{base}/health").json()
    print(f"health: {health}")

    # a wildly out-of-band measurement raises an alert synchronously
    hot = record_to_dict(records[0])
    hot["record_id"] = "DEMO-HOT"
    hot["measured_mm"] = hot["nominal_mm"] + 0.4
    hot["deviation_mm"] = hot["measured_mm"] - hot["nominal_mm"]
    ack = requests.post(f"{base}/measurements", json=hot).json()
    print(f"out-of-band ingest produced alerts: "
          f"{[a['kind'] for a in ack['alerts']]}")

    entry = requests.post(f"{base}/train", json={"cv": 5}).json()
    print(f"trained model version {entry['version']}: "
          f"CV R^2={entry['metrics']['r2']:.3f}, "
          f"RMSE={entry['metrics']['rmse_um']:.2f} um")

    for temp in (20, 30):
        answer = requests.post(f"{base}/whatif", json={
            "nominal": 100, "device": "CMM", "temperature": temp,
        }).json()
        print(f"what-if 100 mm on CMM at {temp} degC -> "
              f"{answer['predicted_deviation_um']:+.1f} um "
              f"({answer['verdict']}, model v{answer['model_version']})")

    report = requests.get(f"{base}/report", params={"tables": "1,2"}).json()
    reg = report["tables"]["regression"]
    print(f"report regression: n={reg['n']}, R^2={reg['r_squared']:.3f}")
    alerts = requests.get(f"{base}/alerts").json()
    print(f"alert inbox: {alerts['total']} alerts")
finally:
    service.stop()
    print("service stopped")
