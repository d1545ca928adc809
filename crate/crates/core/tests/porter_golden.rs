use std::collections::BTreeSet;

use featmatch::ingest::{load_schema, ColumnMap, ComposePolicy, SchemaSource};
use featmatch::textnorm::{lemmatize, normalize_records, porter, NormConfig};

const GOLDEN: &str = include_str!("data/porter_golden.tsv");

#[test]
fn matches_reference_stems() {
    let mut checked = 0;
    let mut wrong = Vec::new();
    for line in GOLDEN.lines().filter(|l| !l.starts_with('#') && !l.is_empty()) {
        let (word, stem) = line.split_once('\t').expect("word<TAB>stem");
        let got = porter::stem(word);
        if got != stem {
            wrong.push(format!("{word}: want {stem}, got {got}"));
        }
        checked += 1;
    }
    assert!(checked > 1000, "only {checked} golden entries");
    assert!(wrong.is_empty(), "{} mismatches:\n{}", wrong.len(), wrong.join("\n"));
}

fn fixture_vocabulary() -> BTreeSet<String> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let mut vocab = BTreeSet::new();
    let cfg = NormConfig {
        lemmatizer: featmatch::textnorm::Lemmatizer::None,
        ..NormConfig::default()
    };
    for file in ["perth.csv", "kingcounty.csv", "imdb.csv", "netflix.csv"] {
        let records = load_schema(
            &SchemaSource::Path(format!("{dir}/{file}").into()),
            file,
            &ColumnMap::default(),
        )
        .unwrap();
        for policy in [ComposePolicy::NameOnly, ComposePolicy::NamePlusDescription] {
            for f in normalize_records(&records, policy, &cfg) {
                vocab.extend(f.token_set.iter().map(String::from));
            }
        }
    }
    vocab
}

#[test]
fn stems_are_stable_on_fixture_vocabulary() {
    let cfg = NormConfig::default();
    let vocab = fixture_vocabulary();
    assert!(vocab.len() > 20);
    for word in &vocab {
        let once = lemmatize(word, &cfg);
        assert_eq!(lemmatize(&once, &cfg), once, "{word}");
    }
}
