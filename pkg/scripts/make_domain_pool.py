#!/usr/bin/env python3
"""Deterministically generate the bundled domain/variable pool asset.

Run from the repo root:  python3 scripts/make_domain_pool.py
"""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "tsforge" / "assets" / "domain_pool.json"

# (domain, cadence profile, [(metric, unit), ...])
# Cadence profiles: "fast" = minutely, "hourly", "daily".
DOMAINS = [
    ("Application Performance", "fast", [
        ("request latency", "ms"), ("error rate", "%"), ("throughput", "req/s"),
        ("apdex score", "score"), ("garbage collection pause", "ms"),
        ("active sessions", "sessions"), ("queue depth", "messages"),
    ]),
    ("Education", "daily", [
        ("course enrollments", "students"), ("lecture attendance", "students"),
        ("assignment submissions", "submissions"), ("forum posts", "posts"),
        ("video watch time", "hours"), ("quiz completion rate", "%"),
        ("library checkouts", "books"),
    ]),
    ("Retail", "daily", [
        ("daily sales", "USD"), ("foot traffic", "visitors"), ("inventory level", "units"),
        ("basket size", "items"), ("return rate", "%"), ("coupon redemptions", "coupons"),
        ("checkout queue length", "customers"),
    ]),
    ("Redis Database", "fast", [
        ("commands processed", "ops/s"), ("keyspace hits", "hits/s"),
        ("memory used", "MB"), ("connected clients", "clients"),
        ("evicted keys", "keys/s"), ("replication lag", "ms"),
        ("blocked clients", "clients"),
    ]),
    ("Network Infrastructure", "fast", [
        ("inbound bandwidth", "Mbps"), ("outbound bandwidth", "Mbps"),
        ("packet loss", "%"), ("round-trip latency", "ms"),
        ("active connections", "connections"), ("dns query rate", "queries/s"),
        ("interface errors", "errors/s"),
    ]),
    ("Social Media", "hourly", [
        ("post impressions", "impressions"), ("new followers", "followers"),
        ("engagement rate", "%"), ("shares", "shares"), ("comments", "comments"),
        ("hashtag mentions", "mentions"), ("story views", "views"),
    ]),
    ("Manufacturing", "fast", [
        ("spindle vibration", "mm/s"), ("motor temperature", "°C"),
        ("units produced", "units/h"), ("defect rate", "%"),
        ("line utilization", "%"), ("hydraulic pressure", "bar"),
        ("energy draw", "kW"),
    ]),
    ("Healthcare", "hourly", [
        ("emergency admissions", "patients"), ("bed occupancy", "%"),
        ("average wait time", "minutes"), ("lab turnaround", "minutes"),
        ("medication dispenses", "orders"), ("icu census", "patients"),
        ("discharge count", "patients"),
    ]),
    ("Internet of Things", "fast", [
        ("sensor battery level", "%"), ("ambient temperature", "°C"),
        ("humidity", "%"), ("device uptime", "hours"),
        ("message rate", "msgs/s"), ("signal strength", "dBm"),
        ("gateway throughput", "KB/s"),
    ]),
    ("Media and Entertainment", "hourly", [
        ("concurrent streams", "streams"), ("playback errors", "errors"),
        ("bitrate delivered", "Mbps"), ("new subscriptions", "accounts"),
        ("content downloads", "downloads"), ("ad impressions", "impressions"),
        ("watch session length", "minutes"),
    ]),
    ("Energy", "hourly", [
        ("grid load", "MW"), ("solar generation", "MW"), ("wind generation", "MW"),
        ("spot price", "USD/MWh"), ("substation temperature", "°C"),
        ("frequency deviation", "mHz"), ("battery state of charge", "%"),
    ]),
    ("Agriculture", "hourly", [
        ("soil moisture", "%"), ("canopy temperature", "°C"),
        ("irrigation flow", "L/min"), ("greenhouse co2", "ppm"),
        ("leaf wetness", "%"), ("silo grain level", "tonnes"),
        ("pump power draw", "kW"),
    ]),
    ("Microservices", "fast", [
        ("service latency p50", "ms"), ("rpc error rate", "%"),
        ("container restarts", "restarts"), ("cpu utilization", "%"),
        ("memory utilization", "%"), ("circuit breaker trips", "trips"),
        ("message queue lag", "messages"),
    ]),
    ("Finance", "daily", [
        ("closing price", "USD"), ("trading volume", "shares"),
        ("volatility index", "points"), ("order book depth", "orders"),
        ("settlement failures", "trades"), ("margin utilization", "%"),
        ("fx rate", "rate"),
    ]),
    ("Traffic and Transportation", "fast", [
        ("vehicle count", "vehicles"), ("average speed", "km/h"),
        ("intersection wait time", "seconds"), ("transit ridership", "passengers"),
        ("parking occupancy", "%"), ("incident reports", "incidents"),
        ("toll transactions", "transactions"),
    ]),
    ("Advertising", "hourly", [
        ("ad spend", "USD"), ("click-through rate", "%"), ("impressions served", "impressions"),
        ("conversions", "conversions"), ("cost per click", "USD"),
        ("frequency cap hits", "hits"), ("viewability", "%"),
    ]),
    ("Oracle Database", "fast", [
        ("buffer cache hit ratio", "%"), ("active sessions", "sessions"),
        ("redo log writes", "writes/s"), ("tablespace usage", "%"),
        ("sql executions", "execs/s"), ("lock waits", "waits"),
        ("pga memory", "MB"),
    ]),
    ("Marketing and Sales", "daily", [
        ("leads generated", "leads"), ("email open rate", "%"),
        ("pipeline value", "USD"), ("demo bookings", "bookings"),
        ("churned accounts", "accounts"), ("website signups", "signups"),
        ("campaign reach", "contacts"),
    ]),
    ("Weather Forecasting", "hourly", [
        ("air temperature", "°C"), ("wind speed", "m/s"), ("barometric pressure", "hPa"),
        ("precipitation", "mm"), ("relative humidity", "%"),
        ("solar irradiance", "W/m²"), ("visibility", "km"),
    ]),
    ("Web Servers", "fast", [
        ("requests per second", "req/s"), ("5xx responses", "responses/s"),
        ("tls handshake time", "ms"), ("worker utilization", "%"),
        ("cache hit ratio", "%"), ("open file descriptors", "fds"),
        ("bytes served", "MB/s"),
    ]),
    ("Environmental", "hourly", [
        ("pm2.5 concentration", "µg/m³"), ("ozone level", "ppb"),
        ("river gauge height", "m"), ("noise level", "dB"),
        ("water turbidity", "NTU"), ("uv index", "index"),
        ("reservoir volume", "ML"),
    ]),
    ("Kubernetes Cluster", "fast", [
        ("pod count", "pods"), ("node cpu usage", "%"), ("node memory usage", "%"),
        ("pending pods", "pods"), ("api server latency", "ms"),
        ("etcd commit duration", "ms"), ("network egress", "MB/s"),
    ]),
    ("Sports Analytics", "daily", [
        ("ticket sales", "tickets"), ("player load", "AU"),
        ("training distance", "km"), ("merchandise revenue", "USD"),
        ("app active users", "users"), ("broadcast viewership", "viewers"),
        ("injury reports", "reports"),
    ]),
    # Reserve domains beyond the core taxonomy.
    ("Logistics", "hourly", [
        ("packages scanned", "packages"), ("fleet fuel consumption", "L/h"),
        ("warehouse temperature", "°C"), ("dock utilization", "%"),
        ("delivery exceptions", "exceptions"), ("route delay", "minutes"),
        ("conveyor throughput", "items/h"),
    ]),
    ("Telecommunications", "fast", [
        ("call setup time", "ms"), ("dropped call rate", "%"),
        ("cell throughput", "Mbps"), ("active subscribers", "subscribers"),
        ("sms volume", "messages/s"), ("tower power draw", "kW"),
        ("spectrum utilization", "%"),
    ]),
]

CADENCE = {
    "fast": (60, "datetime_second"),
    "hourly": (3600, "datetime_minute"),
    "daily": (86400, "date_only"),
}

QUALIFIERS = ["", "peak ", "rolling "]

DATE_RANGES = [
    ("2021-01-01 00:00:00", "2022-12-31 23:59:00"),
    ("2022-03-01 00:00:00", "2024-02-29 23:59:00"),
    ("2023-01-01 00:00:00", "2024-06-30 23:59:00"),
    ("2021-06-01 00:00:00", "2023-05-31 23:59:00"),
]


def main():
    total_target = 517
    domains = []
    counter = 0
    for di, (name, cadence, metrics) in enumerate(DOMAINS):
        interval, ts_fmt = CADENCE[cadence]
        per_domain = 21 if di < 17 else 20
        variables = []
        for qi, qual in enumerate(QUALIFIERS):
            for metric, unit in metrics:
                if len(variables) >= per_domain:
                    break
                dr = DATE_RANGES[(di + qi + counter) % len(DATE_RANGES)]
                if ts_fmt == "date_only":
                    dr = (dr[0][:10], dr[1][:10])
                variables.append({
                    "name": (qual + metric).strip(),
                    "unit": unit,
                    "sampling_interval_s": interval,
                    "date_range": list(dr),
                    "timestamp_format": ts_fmt,
                    "calendar_constraints": None,
                })
                counter += 1
        domains.append({"name": name, "variables": variables})
    total = sum(len(d["variables"]) for d in domains)
    assert total == total_target, f"expected {total_target} variables, got {total}"
    OUT.write_text(json.dumps({"domains": domains}, indent=2, ensure_ascii=False) + "\n")
    print(f"wrote {OUT} ({len(domains)} domains, {total} variables)")


if __name__ == "__main__":
    main()
