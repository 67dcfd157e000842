#!/usr/bin/env python3
"""Regenerate the bundled scan-dataset fixtures under data/fixtures/.

scan_2023-05-10.jsonl  2,051 hosts; 1,790 carry a customer PTR, 161 of those
                       present a Peplink certificate, and the remaining 1,629
                       spread over the twenty POPs as listed in POP_COUNTS.
pep_100.jsonl          100 customer hosts, 9 of them Peplink.
small_10.csv           ten CSV rows, one with an unparseable address.
geofeed.csv            customer geolocation for the big fixture.
"""

import argparse
import json
import random
from pathlib import Path

POP_COUNTS = [
    ("sttlwax1", 243), ("atlagax1", 210), ("dllstxx1", 186), ("chcoilx1", 182),
    ("lsancax1", 173), ("sydyaus1", 148), ("nwyynyx1", 144), ("frntdeu1", 124),
    ("dnvrcox1", 87), ("lndngbr1", 56), ("mdrdesp1", 20), ("sntoch1", 19),
    ("acklnzl1", 11), ("lgosnga1", 6), ("bgtacol1", 5), ("limaper1", 3),
    ("prthaus1", 3), ("qrtomex1", 3), ("splobra1", 3), ("tkyojpn1", 3),
]

# Customer sites sit a little way from their POP city.
POP_CUSTOMER = {
    "sttlwax1": (46.60, -120.51), "atlagax1": (32.84, -83.63), "dllstxx1": (31.55, -97.15),
    "chcoilx1": (42.27, -89.09), "lsancax1": (35.37, -119.02), "sydyaus1": (-35.28, 149.13),
    "nwyynyx1": (42.65, -73.75), "frntdeu1": (48.78, 9.18), "dnvrcox1": (38.83, -104.82),
    "lndngbr1": (52.49, -1.89), "mdrdesp1": (39.86, -4.02), "sntoch1": (-36.83, -73.05),
    "acklnzl1": (-37.79, 175.28), "lgosnga1": (6.40, 5.25), "bgtacol1": (6.24, -75.58),
    "limaper1": (-13.53, -71.97), "prthaus1": (-32.05, 115.75), "qrtomex1": (20.59, -100.39),
    "splobra1": (-22.91, -47.06), "tkyojpn1": (36.39, 139.06),
}

TOTAL_HOSTS = 2051
PEPLINK = 161
CUSTOMERS = 1629 + PEPLINK
STARLINK_ASN = 14593

SERVICES = [(80, "http"), (443, "https"), (22, "ssh"), (8080, "http"), (53, "dns"),
            (1900, "upnp"), (8443, "https"), (21, "ftp"), (554, "rtsp"), (5060, "sip")]


def services(rng):
    k = rng.choice([1, 1, 1, 2, 2, 3])
    return [{"port": p, "protocol": n} for p, n in rng.sample(SERVICES, k)]


def customer_record(rng, addr, pop, pep):
    svc = services(rng)
    tls = []
    if pep:
        tls = [rng.choice(["Peplink MAX BR1 Mini", "peplink.local", "*.peplink.com"])]
        svc = [{"port": 443, "protocol": "https"}]
    elif any(s["port"] in (443, 8443) for s in svc):
        tls = [rng.choice(["router.local", "nas.home.arpa", "*.synology.me", "unifi.local"])]
    return {
        "address": addr,
        "ptr_name": f"customer.{pop}.pop.starlinkisp.net",
        "soa_name": "starlinkisp.net",
        "tls_subject_names": tls,
        "open_services": svc,
        "asn": STARLINK_ASN,
    }


# Hosts that must not pass the customer PTR filter.
def other_record(rng, addr, i):
    kind = i % 6
    ptr = {
        0: None,
        1: "ae1.core1.sttlwax1.starlinkisp.net",
        2: f"customer.{rng.choice(POP_COUNTS)[0]}.pop.starlinkisp.net.example.org",
        3: "dns.starlinkisp.net",
        4: f"customer.pop.starlinkisp.net",
        5: f"gw{i}.ground.starlinkisp.net",
    }[kind]
    r = {"address": addr, "soa_name": "starlinkisp.net", "tls_subject_names": [],
         "open_services": services(rng), "asn": STARLINK_ASN}
    if ptr:
        r["ptr_name"] = ptr
    return r


def pop_block(index):
    # POP i owns 98.97.(8i).0/21
    return 8 * index


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data" / "fixtures"))
    ap.add_argument("--seed", type=int, default=20230510)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    # Peplink hosts are spread over the POPs in proportion to their size.
    pep_per_pop = {pop: 0 for pop, _ in POP_COUNTS}
    weighted = [pop for pop, n in POP_COUNTS for _ in range(n)]
    for pop in rng.sample(weighted, PEPLINK):
        pep_per_pop[pop] += 1

    records = []
    for i, (pop, n) in enumerate(POP_COUNTS):
        base = pop_block(i)
        hosts = rng.sample(range(8 * 254), n + pep_per_pop[pop])
        for k, h in enumerate(hosts):
            addr = f"98.97.{base + h // 254}.{h % 254 + 1}"
            records.append(customer_record(rng, addr, pop, k < pep_per_pop[pop]))
    others = TOTAL_HOSTS - CUSTOMERS
    for i, h in enumerate(rng.sample(range(4 * 254), others)):
        records.append(other_record(rng, f"149.19.{108 + h // 254}.{h % 254 + 1}", i))
    rng.shuffle(records)
    assert len(records) == TOTAL_HOSTS
    with open(out / "scan_2023-05-10.jsonl", "w") as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True) + "\n")

    with open(out / "geofeed.csv", "w") as f:
        f.write("prefix,country,region,city,lat,lon\n")
        for i, (pop, _) in enumerate(POP_COUNTS):
            lat, lon = POP_CUSTOMER[pop]
            f.write(f"98.97.{pop_block(i)}.0/21,XX,,{pop},{lat:.2f},{lon:.2f}\n")
        # A more specific entry overrides the first /24 of the Lagos block.
        lagos = pop_block([p for p, _ in POP_COUNTS].index("lgosnga1"))
        f.write(f"98.97.{lagos}.0/24,NG,Edo,Okomu,6.40,5.25\n")
        f.write("not-a-prefix,XX,,broken,0,0\n")

    prng = random.Random(args.seed + 1)
    with open(out / "pep_100.jsonl", "w") as f:
        peps = set(prng.sample(range(100), 9))
        for i in range(100):
            pop = prng.choice(POP_COUNTS)[0]
            f.write(json.dumps(customer_record(prng, f"98.98.0.{i + 1}", pop, i in peps), sort_keys=True) + "\n")

    with open(out / "small_10.csv", "w") as f:
        f.write("address,ptr_name,soa_name,tls_subject_names,open_services,asn\n")
        rows = [
            ("98.97.0.10", "customer.sttlwax1.pop.starlinkisp.net", "", "80/http", 14593),
            ("98.97.0.11", "customer.atlagax1.pop.starlinkisp.net", "router.local", "443/https", 14593),
            ("98.97.0.12", "customer.dllstxx1.pop.starlinkisp.net", "", "22/ssh;80/http", 14593),
            ("98.97.0.13", "CUSTOMER.CHCOILX1.POP.STARLINKISP.NET.", "", "8080/http", 14593),
            ("98.97.0.300", "customer.lsancax1.pop.starlinkisp.net", "", "80/http", 14593),
            ("98.97.0.14", "customer.sydyaus1.pop.starlinkisp.net", "Peplink MAX", "443/https", 14593),
            ("98.97.0.15", "customer.zzzzzzz9.pop.starlinkisp.net", "", "80/http", 14593),
            ("98.97.0.16", "", "", "53/dns", 14593),
            ("2605:59c8:1::1", "customer.frntdeu1.pop.starlinkisp.net", "", "443/https", 14593),
            ("98.97.0.17", "ae1.core1.sttlwax1.starlinkisp.net", "", "179/bgp", 14593),
        ]
        for a, ptr, tls, svc, asn in rows:
            f.write(f"{a},{ptr},starlinkisp.net,{tls},{svc},{asn}\n")


if __name__ == "__main__":
    main()
