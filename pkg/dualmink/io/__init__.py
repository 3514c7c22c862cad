from .Documents import (
    MANIFEST_SCHEMA,
    MEASURE_SCHEMA,
    POLYTOPE_SCHEMA,
    STAR_SCHEMA,
    RunManifest,
    canonical_text,
    digest,
    load_config,
    load_measure,
    load_polytope,
    load_star,
    parse_measure,
    parse_polytope,
    parse_star,
    read_document,
    write_csv,
    write_document,
)
