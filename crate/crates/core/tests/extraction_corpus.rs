use std::fs;
use std::path::PathBuf;

use crawlcontrast::{build_pairings, extract_declarations, ColorValue, StyleDeclaration};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/corpus")
}

fn canonical(decl: &StyleDeclaration) -> String {
    let value = match &decl.parsed {
        Ok(ColorValue::Color(c)) => c.to_hex(),
        Ok(ColorValue::Keyword(k)) => k.as_str().to_string(),
        Err(_) => "!invalid".to_string(),
    };
    format!("{}\t{}\t{}\n", decl.origin.as_str(), decl.property.as_str(), value)
}

#[test]
fn corpus_matches_hand_enumeration() {
    let mut documents: Vec<PathBuf> = fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "html"))
        .collect();
    documents.sort();
    assert_eq!(documents.len(), 20);

    for path in documents {
        let html = fs::read(&path).unwrap();
        let decls = extract_declarations(&html, None);
        let got: String = decls.iter().map(canonical).collect();
        let expected = fs::read_to_string(path.with_extension("expected")).unwrap();
        assert_eq!(got, expected, "declarations of {}", path.display());

        let got: String = build_pairings(&decls)
            .iter()
            .map(|p| format!("{}\t{}\t{}\n", p.fg.to_hex(), p.bg.to_hex(), p.provenance.as_str()))
            .collect();
        let expected = fs::read_to_string(path.with_extension("pairs")).unwrap();
        assert_eq!(got, expected, "pairings of {}", path.display());

        assert_eq!(extract_declarations(&html, None), decls);
    }
}

#[test]
fn embedded_declarations_share_rule_ids() {
    let html = fs::read(corpus_dir().join("01-basic-rule.html")).unwrap();
    let decls = extract_declarations(&html, None);
    assert_eq!(decls[0].rule_id, decls[1].rule_id);
}
