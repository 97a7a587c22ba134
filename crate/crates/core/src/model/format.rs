//! Line-oriented model and evidence files.
//!
//! ```text
//! var <name> <domain_size>
//! feature <OR|AND> <weight> <name>=<value> [!<name>=<value> ...]
//! offset <real>
//! ```
//!
//! `#` starts a comment. Weights are written with the shortest decimal that
//! round-trips, so `parse(model.to_string()) == model`.

use std::fmt;

use super::{
    Connective, Evidence, Feature, GraphicalModel, Literal, ModelBuilder, ModelError, Polarity,
};
use crate::scalar::Scalar;

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_number<N: std::str::FromStr>(token: &str, what: &str) -> Result<N, ModelError> {
    token
        .parse()
        .map_err(|_| ModelError::Syntax(format!("invalid {what} `{token}`")))
}

/// Splits `name=value` at the last `=`.
fn split_assignment(token: &str) -> Result<(&str, usize), ModelError> {
    let (name, value) = token
        .rsplit_once('=')
        .ok_or_else(|| ModelError::Syntax(format!("expected name=value, got `{token}`")))?;
    if name.is_empty() {
        return Err(ModelError::Syntax(format!(
            "missing variable name in `{token}`"
        )));
    }
    Ok((name, parse_number(value, "value")?))
}

fn parse_literal<T: Scalar>(builder: &ModelBuilder<T>, token: &str) -> Result<Literal, ModelError> {
    let (polarity, body) = match token.strip_prefix('!') {
        Some(rest) => (Polarity::Neq, rest),
        None => (Polarity::Eq, token),
    };
    let (name, value) = split_assignment(body)?;
    let var = builder
        .var_id(name)
        .ok_or_else(|| ModelError::UnknownVariable(name.to_owned()))?;
    Ok(Literal {
        var,
        value,
        polarity,
    })
}

fn parse_line<T: Scalar>(builder: &mut ModelBuilder<T>, line: &str) -> Result<(), ModelError> {
    let mut tokens = line.split_whitespace();
    let Some(keyword) = tokens.next() else {
        return Ok(());
    };
    match keyword {
        "var" => {
            let (Some(name), Some(size), None) = (tokens.next(), tokens.next(), tokens.next())
            else {
                return Err(ModelError::Syntax(
                    "expected `var <name> <domain_size>`".into(),
                ));
            };
            if name.contains(['=', '!']) {
                return Err(ModelError::Syntax(format!(
                    "invalid variable name `{name}`"
                )));
            }
            builder.var(name, parse_number(size, "domain size")?)?;
        }
        "feature" => {
            let connective = match tokens.next() {
                Some("OR") => Connective::Or,
                Some("AND") => Connective::And,
                other => {
                    return Err(ModelError::Syntax(format!(
                        "expected OR or AND, got `{}`",
                        other.unwrap_or("")
                    )))
                }
            };
            let weight: T = match tokens.next() {
                Some(w) => parse_number(w, "weight")?,
                None => return Err(ModelError::Syntax("missing weight".into())),
            };
            let literals = tokens
                .map(|t| parse_literal(builder, t))
                .collect::<Result<Vec<_>, _>>()?;
            builder.feature(connective, weight, literals)?;
        }
        "offset" => {
            let (Some(value), None) = (tokens.next(), tokens.next()) else {
                return Err(ModelError::Syntax("expected `offset <real>`".into()));
            };
            builder.offset(parse_number(value, "offset")?)?;
        }
        other => return Err(ModelError::Syntax(format!("unknown statement `{other}`"))),
    }
    Ok(())
}

pub fn parse_model<T: Scalar>(text: &str) -> Result<GraphicalModel<T>, ModelError> {
    let mut builder = ModelBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        parse_line(&mut builder, strip_comment(raw)).map_err(|e| e.at_line(i + 1))?;
    }
    Ok(builder.build())
}

/// Parses `name=value` lines against a model's variables.
pub fn parse_evidence<T: Scalar>(
    text: &str,
    model: &GraphicalModel<T>,
) -> Result<Evidence, ModelError> {
    let mut evidence = Evidence::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let parsed = (|| {
            let (name, value) = split_assignment(line)?;
            let var = model
                .var_id(name)
                .ok_or_else(|| ModelError::UnknownVariable(name.to_owned()))?;
            if value >= model.domain_size(var) {
                return Err(ModelError::ValueOutOfDomain {
                    var: name.to_owned(),
                    value,
                    domain_size: model.domain_size(var),
                });
            }
            if evidence.insert(var, value).is_some() {
                return Err(ModelError::DuplicateEvidence(name.to_owned()));
            }
            Ok(())
        })();
        parsed.map_err(|e| e.at_line(i + 1))?;
    }
    Ok(evidence)
}

impl<T: Scalar> fmt::Display for GraphicalModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.variables() {
            writeln!(f, "var {} {}", v.name, v.domain_size)?;
        }
        for feature in self.features() {
            write_feature(f, self, feature)?;
        }
        if self.log_offset() != T::zero() {
            writeln!(f, "offset {}", self.log_offset())?;
        }
        Ok(())
    }
}

fn write_feature<T: Scalar>(
    f: &mut fmt::Formatter<'_>,
    model: &GraphicalModel<T>,
    feature: &Feature<T>,
) -> fmt::Result {
    write!(f, "feature {} {}", feature.connective, feature.weight)?;
    for lit in &feature.literals {
        let bang = if lit.polarity == Polarity::Neq {
            "!"
        } else {
            ""
        };
        write!(f, " {}{}={}", bang, model.var_name(lit.var), lit.value)?;
    }
    writeln!(f)
}
