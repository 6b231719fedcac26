//! Model-spec strings.
//!
//! Bracket notation lists the maximal elements of the descending class, as in
//! `[AC][BC]`. With multi-character feature names, names inside a bracket are
//! separated by spaces or commas: `[DS1 DS2][DS3]`. A string starting with `{`
//! is read as JSON, `{"ascending": [["A", "B"]]}`, giving seeds of the
//! ascending class.

use serde::Deserialize;

use crate::error::{HasError, Result};
use crate::lattice::{ascending_closure, descending_closure, FeatureSet, SubsetClass};

fn syntax(input: &str, reason: impl Into<String>) -> HasError {
    HasError::ModelSyntax {
        input: input.to_string(),
        reason: reason.into(),
    }
}

fn lookup<S: AsRef<str>>(input: &str, names: &[S], token: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n.as_ref() == token)
        .ok_or_else(|| syntax(input, format!("unknown feature '{token}'")))
}

fn parse_group<S: AsRef<str>>(input: &str, names: &[S], body: &str) -> Result<FeatureSet> {
    let single = names.iter().all(|n| n.as_ref().chars().count() == 1);
    let mut set = FeatureSet::EMPTY;
    for word in body
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
    {
        if single {
            for ch in word.chars() {
                let i = lookup(input, names, ch.encode_utf8(&mut [0; 4]))?;
                set = set.union(FeatureSet::singleton(i));
            }
        } else {
            set = set.union(FeatureSet::singleton(lookup(input, names, word)?));
        }
    }
    if set.is_empty() {
        return Err(syntax(input, "empty bracket"));
    }
    Ok(set)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonSpec {
    ascending: Vec<Vec<String>>,
}

/// Parses a model spec into its ascending class; `names.len()` is `k`.
pub fn parse_model<S: AsRef<str>>(text: &str, names: &[S]) -> Result<SubsetClass> {
    let k = names.len();
    let input = text.trim();
    if input.starts_with('{') {
        let spec: JsonSpec =
            serde_json::from_str(input).map_err(|e| syntax(input, e.to_string()))?;
        let seeds = spec
            .ascending
            .iter()
            .map(|group| {
                group.iter().try_fold(FeatureSet::EMPTY, |acc, name| {
                    Ok(acc.union(FeatureSet::singleton(lookup(input, names, name)?)))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if seeds.is_empty() || seeds.iter().any(|s| s.is_empty()) {
            return Err(syntax(input, "ascending seeds must be nonempty"));
        }
        return ascending_closure(&seeds, k);
    }

    let mut generators = Vec::new();
    let mut rest = input;
    while !rest.is_empty() {
        let Some(body) = rest.strip_prefix('[') else {
            return Err(syntax(input, "expected '['"));
        };
        let Some(end) = body.find(']') else {
            return Err(syntax(input, "unclosed '['"));
        };
        generators.push(parse_group(input, names, &body[..end])?);
        rest = body[end + 1..].trim_start();
    }
    if generators.is_empty() {
        return Err(syntax(input, "no generating sets"));
    }
    let asc = descending_closure(&generators, k)?.complement();
    if asc.is_empty() {
        return Err(HasError::InvalidModel(format!(
            "'{input}' generates every subset, leaving nothing to restrict"
        )));
    }
    Ok(asc)
}

/// Bracket name of the maximal elements of a descending class.
pub fn generating_class_name<S: AsRef<str>>(des: &SubsetClass, names: &[S]) -> String {
    let max = des.maximal_elements();
    if max.is_empty() {
        return "[]".to_string();
    }
    max.iter().map(|s| format!("[{}]", s.name(names))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::default_feature_names;

    fn set(s: &str) -> FeatureSet {
        FeatureSet::from_indices(s.bytes().map(|b| (b - b'A') as usize))
    }

    #[test]
    fn brackets() {
        let names = default_feature_names(3);
        let asc = parse_model("[AC][BC]", &names).unwrap();
        assert_eq!(asc.members(), &[set("AB"), set("ABC")]);
        let asc = parse_model(" [AB] [AC] [BC] ", &names).unwrap();
        assert_eq!(asc.members(), &[set("ABC")]);
        let asc = parse_model("[A][B][C]", &names).unwrap();
        assert_eq!(
            asc.members(),
            &[set("AB"), set("AC"), set("BC"), set("ABC")]
        );
        assert_eq!(
            generating_class_name(&asc.complement(), &names),
            "[A][B][C]"
        );
    }

    #[test]
    fn long_names() {
        let names = ["DS1", "DS2", "DS3", "DS4"];
        let asc = parse_model(
            "[DS1 DS2 DS3][DS1,DS2,DS4][DS1 DS3 DS4][DS2 DS3 DS4]",
            &names,
        )
        .unwrap();
        assert_eq!(asc.members(), &[set("ABCD")]);
        assert_eq!(
            generating_class_name(&asc.complement(), &names),
            "[DS1 DS2 DS3][DS1 DS2 DS4][DS1 DS3 DS4][DS2 DS3 DS4]"
        );
    }

    #[test]
    fn json_seeds() {
        let names = default_feature_names(3);
        let asc = parse_model(r#"{"ascending": [["A","B"]]}"#, &names).unwrap();
        assert_eq!(asc.members(), &[set("AB"), set("ABC")]);
    }

    #[test]
    fn errors() {
        let names = default_feature_names(3);
        for bad in [
            "",
            "AC",
            "[AC",
            "[AD]",
            "[]",
            "[ABC]",
            "{\"ascending\": []}",
            "{bad",
        ] {
            assert!(parse_model(bad, &names).is_err(), "{bad}");
        }
    }
}
