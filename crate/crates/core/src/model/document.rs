use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    String,
    Number,
    Integer,
    Boolean,
    Array,
    Object,
}

impl ValueKind {
    pub fn is_scalar(self) -> bool {
        !matches!(self, ValueKind::Array | ValueKind::Object)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::String => "string",
            ValueKind::Number => "number",
            ValueKind::Integer => "integer",
            ValueKind::Boolean => "boolean",
            ValueKind::Array => "array",
            ValueKind::Object => "object",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "string" => ValueKind::String,
            "number" => ValueKind::Number,
            "integer" => ValueKind::Integer,
            "boolean" => ValueKind::Boolean,
            "array" => ValueKind::Array,
            "object" => ValueKind::Object,
            _ => return None,
        })
    }

    /// Shallow JSON type check. Integers are accepted for number slots.
    pub fn admits(self, value: &Value) -> bool {
        match (self, value) {
            (ValueKind::String, Value::String(_)) => true,
            (ValueKind::Number, Value::Number(_)) => true,
            (ValueKind::Integer, Value::Number(n)) => {
                n.is_i64() || n.is_u64() || n.as_f64().is_some_and(|f| f.fract() == 0.0)
            }
            (ValueKind::Boolean, Value::Bool(_)) => true,
            (ValueKind::Array, Value::Array(_)) => true,
            (ValueKind::Object, Value::Object(_)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A value type with its optional element or property sub-spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueType {
    pub kind: ValueKind,
    /// Element spec for arrays. Its `name` is ignored.
    pub items: Option<Box<ParameterSpec>>,
    /// Property specs for objects.
    pub properties: Option<Vec<ParameterSpec>>,
}

impl ValueType {
    pub fn scalar(kind: ValueKind) -> Self {
        ValueType {
            kind,
            items: None,
            properties: None,
        }
    }

    pub fn array_of(items: ParameterSpec) -> Self {
        ValueType {
            kind: ValueKind::Array,
            items: Some(Box::new(items)),
            properties: None,
        }
    }

    pub fn object_of(properties: Vec<ParameterSpec>) -> Self {
        ValueType {
            kind: ValueKind::Object,
            items: None,
            properties: Some(properties),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpec {
    pub name: String,
    pub value_type: ValueType,
    pub description: String,
    pub required: bool,
    pub enum_values: Option<Vec<Value>>,
    pub default: Option<Value>,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, kind: ValueKind, description: impl Into<String>) -> Self {
        ParameterSpec {
            name: name.into(),
            value_type: ValueType::scalar(kind),
            description: description.into(),
            required: false,
            enum_values: None,
            default: None,
        }
    }

    pub fn required(mut self) -> Self {
        self.required = true;
        self
    }

    pub fn with_enum<I, V>(mut self, values: I) -> Self
    where
        I: IntoIterator<Item = V>,
        V: Into<Value>,
    {
        self.enum_values = Some(values.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_default(mut self, value: impl Into<Value>) -> Self {
        self.default = Some(value.into());
        self
    }

    pub fn with_type(mut self, value_type: ValueType) -> Self {
        self.value_type = value_type;
        self
    }

    pub fn kind(&self) -> ValueKind {
        self.value_type.kind
    }

    /// The JSON-schema property body (everything except the name and the
    /// owner's `required` list).
    pub fn to_schema(&self) -> Value {
        let mut m = Map::new();
        m.insert("type".into(), json!(self.kind().as_str()));
        if !self.description.is_empty() {
            m.insert("description".into(), json!(self.description));
        }
        if let Some(values) = &self.enum_values {
            m.insert("enum".into(), Value::Array(values.clone()));
        }
        if let Some(default) = &self.default {
            m.insert("default".into(), default.clone());
        }
        if let Some(items) = &self.value_type.items {
            m.insert("items".into(), items.to_schema());
        }
        if let Some(props) = &self.value_type.properties {
            let (properties, required) = properties_to_schema(props);
            m.insert("properties".into(), properties);
            m.insert("required".into(), required);
        }
        Value::Object(m)
    }

    pub fn from_schema(name: &str, required: bool, schema: &Value) -> Result<Self, String> {
        let obj = schema
            .as_object()
            .ok_or_else(|| format!("parameter '{name}': schema must be an object"))?;
        let kind = obj
            .get("type")
            .and_then(Value::as_str)
            .and_then(ValueKind::parse)
            .ok_or_else(|| format!("parameter '{name}': missing or unknown type"))?;
        let items = match obj.get("items") {
            Some(items) => Some(Box::new(ParameterSpec::from_schema("items", true, items)?)),
            None => None,
        };
        let properties = match obj.get("properties") {
            Some(props) => Some(properties_from_schema(props, obj.get("required"))?),
            None => None,
        };
        let enum_values = match obj.get("enum") {
            Some(Value::Array(values)) => Some(values.clone()),
            Some(_) => return Err(format!("parameter '{name}': enum must be a list")),
            None => None,
        };
        Ok(ParameterSpec {
            name: name.to_string(),
            value_type: ValueType {
                kind,
                items,
                properties,
            },
            description: obj
                .get("description")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_string(),
            required,
            enum_values,
            default: obj.get("default").cloned(),
        })
    }
}

fn properties_to_schema(params: &[ParameterSpec]) -> (Value, Value) {
    let properties: Map<String, Value> = params
        .iter()
        .map(|p| (p.name.clone(), p.to_schema()))
        .collect();
    let required: Vec<Value> = params
        .iter()
        .filter(|p| p.required)
        .map(|p| json!(p.name))
        .collect();
    (Value::Object(properties), Value::Array(required))
}

fn properties_from_schema(
    props: &Value,
    required: Option<&Value>,
) -> Result<Vec<ParameterSpec>, String> {
    let props = props
        .as_object()
        .ok_or("properties must be an object")?;
    let required: Vec<&str> = match required {
        Some(Value::Array(names)) => names.iter().filter_map(Value::as_str).collect(),
        Some(_) => return Err("required must be a list".into()),
        None => Vec::new(),
    };
    props
        .iter()
        .map(|(name, schema)| ParameterSpec::from_schema(name, required.contains(&name.as_str()), schema))
        .collect()
}

/// Declarative tool interface: name, description, typed parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolDocument {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ParameterSpec>,
}

impl ToolDocument {
    pub fn new(name: impl Into<String>, description: impl Into<String>) -> Self {
        ToolDocument {
            name: name.into(),
            description: description.into(),
            parameters: Vec::new(),
        }
    }

    pub fn param(mut self, spec: ParameterSpec) -> Self {
        self.parameters.push(spec);
        self
    }

    pub fn parameter(&self, name: &str) -> Option<&ParameterSpec> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn required_names(&self) -> Vec<&str> {
        self.parameters
            .iter()
            .filter(|p| p.required)
            .map(|p| p.name.as_str())
            .collect()
    }

    /// `{"name", "description", "parameters": {"type": "object", "properties", "required"}}`
    pub fn to_schema_json(&self) -> Value {
        let (properties, required) = properties_to_schema(&self.parameters);
        json!({
            "name": self.name,
            "description": self.description,
            "parameters": {
                "type": "object",
                "properties": properties,
                "required": required,
            }
        })
    }

    pub fn from_schema_json(value: &Value) -> Result<Self, String> {
        let obj = value.as_object().ok_or("tool document must be an object")?;
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or("tool document needs a string name")?;
        let description = obj
            .get("description")
            .and_then(Value::as_str)
            .unwrap_or_default();
        let parameters = match obj.get("parameters") {
            None | Some(Value::Null) => Vec::new(),
            Some(params) => {
                let params = params.as_object().ok_or("parameters must be an object")?;
                match params.get("properties") {
                    Some(props) => properties_from_schema(props, params.get("required"))?,
                    None => Vec::new(),
                }
            }
        };
        Ok(ToolDocument {
            name: name.to_string(),
            description: description.to_string(),
            parameters,
        })
    }
}

impl Serialize for ToolDocument {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_schema_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ToolDocument {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        ToolDocument::from_schema_json(&value).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_schema_shape() {
        let raw = json!({
            "name": "lookup",
            "description": "d",
            "parameters": {
                "type": "object",
                "properties": {
                    "cities": {"type": "array", "items": {"type": "string", "enum": ["a", "b"]}},
                    "filter": {"type": "object", "properties": {"value": {"type": "integer"}}, "required": ["value"]}
                },
                "required": ["cities"]
            }
        });
        let doc = ToolDocument::from_schema_json(&raw).unwrap();
        assert_eq!(doc.parameters.len(), 2);
        assert!(doc.parameters[0].required);
        assert!(!doc.parameters[1].required);
        let items = doc.parameters[0].value_type.items.as_ref().unwrap();
        assert_eq!(items.kind(), ValueKind::String);
        assert_eq!(items.enum_values.as_ref().unwrap().len(), 2);
        let props = doc.parameters[1].value_type.properties.as_ref().unwrap();
        assert!(props[0].required);
        assert_eq!(ToolDocument::from_schema_json(&doc.to_schema_json()).unwrap(), doc);
    }

    #[test]
    fn unknown_type_is_rejected() {
        let raw = json!({"name": "x", "parameters": {"type": "object", "properties": {"a": {"type": "tuple"}}}});
        assert!(ToolDocument::from_schema_json(&raw).is_err());
    }

    #[test]
    fn integer_admits_whole_floats_only() {
        assert!(ValueKind::Integer.admits(&json!(3)));
        assert!(ValueKind::Integer.admits(&json!(3.0)));
        assert!(!ValueKind::Integer.admits(&json!(3.5)));
        assert!(ValueKind::Number.admits(&json!(3)));
    }
}
