# proxylab/services: numerical core (stats_core, dgp, proxy, monte_carlo,
# unit_root, vecm) and the I/O layer (ingestion, report, svg).
