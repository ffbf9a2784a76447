//! Built-in problem documents.

use recov::Result;

use crate::doc::{parse, ProblemDocument};

const FIXTURES: &[(&str, &str)] = &[
    ("simplex_vertices", include_str!("../fixtures/simplex_vertices.json")),
    ("simplex_embedded", include_str!("../fixtures/simplex_embedded.json")),
    ("trig_doubled", include_str!("../fixtures/trig_doubled.json")),
    ("rademacher_riesz", include_str!("../fixtures/rademacher_riesz.json")),
    ("hilbert_ls", include_str!("../fixtures/hilbert_ls.json")),
    ("l1_totality", include_str!("../fixtures/l1_totality.json")),
    ("sphere_linear", include_str!("../fixtures/sphere_linear.json")),
    ("sandwich_hilbert", include_str!("../fixtures/sandwich_hilbert.json")),
];

pub fn names() -> Vec<&'static str> {
    FIXTURES.iter().map(|(n, _)| *n).collect()
}

pub fn source(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Option<Result<ProblemDocument>> {
    source(name).map(parse)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_parses_and_round_trips() {
        for name in names() {
            let doc = load(name).unwrap().unwrap();
            assert_eq!(doc.name, name);
            let again = parse(&serde_json::to_string(&doc).unwrap()).unwrap();
            assert_eq!(again, doc);
        }
    }
}
