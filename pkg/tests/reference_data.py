"""Published input tables, transcribed by hand and frozen with the builtin file checksums."""

# region: (floor area m2, households per building, kWh per household and year)
REGION_TABLE = {
    "Galicia": (98.8, 2.1, 4208),
    "Asturias": (193.6, 3.3, 5637),
    "Cantabria": (197.0, 3.2, 3922),
    "Basque Country": (162.6, 6.8, 5080),
    "Navarra": (128.0, 2.7, 5332),
    "Rioja": (151.0, 3.2, 3279),
    "Aragon": (132.6, 2.7, 4551),
    "Catalonia": (120.2, 3.4, 4074),
    "Castilla y Leon": (92.6, 2.0, 3246),
    "Madrid": (167.8, 5.3, 2933),
    "Extremadura": (128.1, 1.6, 2938),
    "Castilla la Mancha": (116.2, 1.6, 3080),
    "Valencia": (131.2, 3.1, 2756),
    "Balearic Islands": (114.3, 2.4, 3203),
    "Andalusia": (102.8, 2.2, 3030),
    "Murcia": (153.7, 2.1, 3425),
    "Canary Islands": (119.5, 2.4, 2889),
    "National": (112.9, 2.7, 3487),
}

PV = {"panel_cost": 360.0, "bos_labour_cost": 360.0, "lifetime": 20.0, "roof_occupation": 10.0}
INVERTER = {"unit_cost": 360.0, "efficiency": 0.93, "lifetime": 10.0, "dc_ac_ratio": 1.2}
CONTROLLER = {"fixed_cost": 50.0, "unit_cost": 60.0, "efficiency": 0.95}
BATTERY_COMMON = {"lifetime": 8.0, "soc_min": 0.05, "charge_rate_max": 0.5, "discharge_rate_max": 0.5,
                  "eff_charge": 0.95, "eff_discharge": 0.95}
# chemistry: (EUR/kWh, ageing parameter)
BATTERIES = {
    "Lithium iron phosphate": (408.0, 562.0),
    "Lithium titanate": (668.0, 844.0),
    "Lithium Manganese Oxide": (335.0, 131.0),
    "Lithium Nickel Cobalt Aluminium Oxide": (384.0, 394.0),
    "Lithium Nickel Manganese Cobalt Oxide": (392.0, 225.0),
}
DISCOUNT_RATE = 0.02

CHECKSUMS = {
    "reference_catalog.csv": "1ca9be28dfe8b2a622b51e772dfb4f45b98af216248d99e8a95ca820790949fe",
    "regions.csv": "3f8c9239b89f989737ba700743772f61dff3f3db1a0b79247670dc7d6737e495",
    "published_regional_results.csv": "a4c9891732013e287a5772eb9747ba706aac9cb8869eb565395c423ce8923d39",
}


def mismatches(catalog, regions):
    """Differences between loaded builtin data and the frozen tables (empty when equal)."""
    out = []
    for obj, ref, tag in ((catalog.pv, PV, "pv"), (catalog.inverter, INVERTER, "inverter"),
                          (catalog.controller, CONTROLLER, "controller")):
        for k, v in ref.items():
            if getattr(obj, k) != v:
                out.append(f"{tag}.{k}: {getattr(obj, k)} != {v}")
    names = [b.name for b in catalog.batteries]
    if names != list(BATTERIES):
        out.append(f"battery names {names}")
    for b in catalog.batteries:
        cost, ageing = BATTERIES.get(b.name, (None, None))
        if (b.unit_cost, b.ageing_parameter) != (cost, ageing):
            out.append(f"{b.name}: {(b.unit_cost, b.ageing_parameter)} != {(cost, ageing)}")
        for k, v in BATTERY_COMMON.items():
            if getattr(b, k) != v:
                out.append(f"{b.name}.{k}: {getattr(b, k)} != {v}")
    got = {r.region_label: (r.floor_area, r.households, r.annual_consumption_per_household) for r in regions}
    if got != REGION_TABLE:
        out.append("region table differs: " + ", ".join(k for k in REGION_TABLE if got.get(k) != REGION_TABLE[k]))
    return out
