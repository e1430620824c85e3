use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Number, Value};

/// Binding literal used in canonical calls and behavior match tables.
///
/// Serialized as plain JSON, except that `{"ref": "<sub-question id>"}` is the
/// reserved form of [`Literal::Ref`], which resolves to that sub-question's
/// answer at match time.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    String(String),
    Number(Number),
    Boolean(bool),
    List(Vec<Literal>),
    Map(BTreeMap<String, Literal>),
    Ref(String),
}

impl Literal {
    pub fn string(s: impl Into<String>) -> Self {
        Literal::String(s.into())
    }

    pub fn reference(id: impl Into<String>) -> Self {
        Literal::Ref(id.into())
    }

    pub fn integer(i: i64) -> Self {
        Literal::Number(Number::from(i))
    }

    /// Finite floats only; non-finite input yields `None`.
    pub fn float(f: f64) -> Option<Self> {
        Number::from_f64(f).map(Literal::Number)
    }

    pub fn from_value(value: &Value) -> Result<Self, String> {
        Ok(match value {
            Value::Null => return Err("null is not a binding literal".into()),
            Value::Bool(b) => Literal::Boolean(*b),
            Value::Number(n) => Literal::Number(n.clone()),
            Value::String(s) => Literal::String(s.clone()),
            Value::Array(items) => Literal::List(
                items
                    .iter()
                    .map(Literal::from_value)
                    .collect::<Result<_, _>>()?,
            ),
            Value::Object(map) => {
                if map.len() == 1 {
                    if let Some(Value::String(id)) = map.get("ref") {
                        return Ok(Literal::Ref(id.clone()));
                    }
                }
                Literal::Map(
                    map.iter()
                        .map(|(k, v)| Ok((k.clone(), Literal::from_value(v)?)))
                        .collect::<Result<_, String>>()?,
                )
            }
        })
    }

    pub fn to_value(&self) -> Value {
        match self {
            Literal::String(s) => Value::String(s.clone()),
            Literal::Number(n) => Value::Number(n.clone()),
            Literal::Boolean(b) => Value::Bool(*b),
            Literal::List(items) => Value::Array(items.iter().map(Literal::to_value).collect()),
            Literal::Map(map) => Value::Object(
                map.iter()
                    .map(|(k, v)| (k.clone(), v.to_value()))
                    .collect::<Map<_, _>>(),
            ),
            Literal::Ref(id) => {
                let mut m = Map::new();
                m.insert("ref".into(), Value::String(id.clone()));
                Value::Object(m)
            }
        }
    }

    /// Substitutes every `Ref` with the resolved answer. Any unresolved
    /// reference makes the whole literal unresolvable.
    pub fn resolve<F>(&self, answer_of: &F) -> Option<Value>
    where
        F: Fn(&str) -> Option<String> + ?Sized,
    {
        Some(match self {
            Literal::Ref(id) => Value::String(answer_of(id)?),
            Literal::List(items) => Value::Array(
                items
                    .iter()
                    .map(|l| l.resolve(answer_of))
                    .collect::<Option<_>>()?,
            ),
            Literal::Map(map) => Value::Object(
                map.iter()
                    .map(|(k, v)| Some((k.clone(), v.resolve(answer_of)?)))
                    .collect::<Option<Map<_, _>>>()?,
            ),
            other => other.to_value(),
        })
    }

    /// Every sub-question id referenced anywhere inside this literal.
    pub fn refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Literal::Ref(id) => out.push(id),
            Literal::List(items) => items.iter().for_each(|l| l.collect_refs(out)),
            Literal::Map(map) => map.values().for_each(|l| l.collect_refs(out)),
            _ => {}
        }
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        Literal::from_value(&value).map_err(D::Error::custom)
    }
}

impl From<&str> for Literal {
    fn from(s: &str) -> Self {
        Literal::String(s.to_string())
    }
}

impl From<bool> for Literal {
    fn from(b: bool) -> Self {
        Literal::Boolean(b)
    }
}
