mod common;

use common::{fixture, mass, small_corpus};
use pgsim_core::graph::{DistanceOracle, RelaxOptions};
use pgsim_core::io::generator::TableMode;
use pgsim_core::io::{parse_database, read_database, read_query, to_json, write_database, DatabaseDocument};
use pgsim_core::prob::WorldAssignment;
use pgsim_core::query::exact_ssp;
use pgsim_core::Error;

#[test]
fn fixtures_load() {
    let db = read_database(&fixture("desk_db.json")).unwrap();
    assert_eq!(db.ids().collect::<Vec<_>>(), ["fix-a", "fix-b", "graph-002"]);
    for name in ["fix_a.json", "fix_b.json", "graph002_analog.json"] {
        let single = read_database(&fixture(name)).unwrap();
        let g = &single.graphs()[0];
        assert_eq!(db.get(g.id()).unwrap().edge_count(), g.edge_count());
    }
    let q = read_query(&fixture("query_triangle_abc.json")).unwrap();
    assert_eq!((q.delta, q.epsilon), (1, 0.4));
    assert_eq!(q.query.to_graph().unwrap().edge_count(), 3);
}

#[test]
fn world_weight_is_the_product_of_matching_rows() {
    let db = read_database(&fixture("graph002_analog.json")).unwrap();
    let g = &db.graphs()[0];
    // Triangle present, e4 present, e5 absent: rows 0.3 and 0.25.
    let world = WorldAssignment::new(vec![true, true, true, true, false]);
    assert_eq!(g.raw_world_weight(&world), 0.3 * 0.25);
    assert_eq!(g.raw_world_weight(&world), 0.075);
}

#[test]
fn triangle_query_probability_on_graph002() {
    let db = read_database(&fixture("graph002_analog.json")).unwrap();
    let g = &db.graphs()[0];
    let q = read_query(&fixture("query_triangle_abc.json")).unwrap();
    let oracle = DistanceOracle::new(&q.query.to_graph().unwrap(), &RelaxOptions::default()).unwrap();
    // All triangle labels are distinct, so one relaxation embeds exactly when
    // two of the three triangle edges are present.
    let expected = mass(g, |p| p[..3].iter().filter(|&&x| x).count() >= 2);
    let got = exact_ssp(g, &oracle, q.delta, 20).unwrap();
    assert!((got - expected).abs() < 1e-12);
    assert!((expected - 0.45).abs() < 1e-12);
}

#[test]
fn database_round_trips() {
    for mode in [TableMode::Independent, TableMode::RandomCorrelated, TableMode::MaxTransform] {
        let db = small_corpus(6, 9, mode);
        let text = to_json(&DatabaseDocument::from_database(&db));
        let back = parse_database(&text).unwrap();
        assert_eq!(back.checksum(), db.checksum());
        assert_eq!(to_json(&DatabaseDocument::from_database(&back)), text);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.json");
        write_database(&db, &path).unwrap();
        assert_eq!(read_database(&path).unwrap().checksum(), db.checksum());
    }
}

#[test]
fn malformed_documents_are_rejected() {
    let text = std::fs::read_to_string(fixture("fix_a.json")).unwrap();
    let future = text.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
    assert!(matches!(parse_database(&future), Err(Error::FormatVersion { found: 99, .. })));

    let extra = text.replacen("\"graphs\"", "\"unexpected\": 1, \"graphs\"", 1);
    assert!(parse_database(&extra).is_err());

    assert!(parse_database("{ not json").is_err());
}
