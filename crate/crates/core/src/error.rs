use std::fmt;

/// Invalid user-supplied configuration. `field` is a dotted path such as
/// `bss[1].tx_power_dbm`; `line` is filled in when the input text is known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            line: None,
            message: message.into(),
        }
    }

    /// Attaches the line of `field` within `text`, if it can be located.
    pub fn located_in(mut self, text: &str) -> Self {
        if self.line.is_none() {
            self.line = locate_field(text, &self.field);
        }
        self
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid field `{}`", self.field)?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Best-effort line lookup for a dotted path in pretty-printed JSON.
///
/// Finds the last key of the path; when the path indexes an array
/// (`bss[2].ap`), the occurrence matching that index is used.
pub(crate) fn locate_field(text: &str, path: &str) -> Option<usize> {
    let mut key = None;
    let mut index = 0usize;
    for seg in path.split('.') {
        let (name, idx) = match seg.find('[') {
            Some(p) => (
                &seg[..p],
                seg[p + 1..].trim_end_matches(']').parse::<usize>().ok(),
            ),
            None => (seg, None),
        };
        if !name.is_empty() {
            key = Some(name);
        }
        if let Some(i) = idx {
            index = i;
        }
    }
    let key = key?;
    let needle = format!("\"{key}\"");
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.contains(&needle))
        .nth(index)
        .or_else(|| text.lines().enumerate().find(|(_, l)| l.contains(&needle)))
        .map(|(n, _)| n + 1)
}

/// Parses JSON into `T`, reporting the failing field path and line.
pub fn from_json_str<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            field: if field == "." { "<root>".into() } else { field },
            line: Some(inner.line()),
            message: inner.to_string(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locates_indexed_keys() {
        let text = "{\n  \"bss\": [\n    {\"ap\": 1},\n    {\"ap\": 2}\n  ]\n}";
        assert_eq!(locate_field(text, "bss[1].ap"), Some(4));
        assert_eq!(locate_field(text, "bss[0].ap"), Some(3));
        assert_eq!(locate_field(text, "missing"), None);
    }

    #[test]
    fn parse_errors_carry_path_and_line() {
        #[derive(serde::Deserialize, Debug)]
        struct Inner {
            #[allow(dead_code)]
            exponent: f64,
        }
        #[derive(serde::Deserialize, Debug)]
        struct Outer {
            #[allow(dead_code)]
            channel: Inner,
        }
        let err = from_json_str::<Outer>("{\n \"channel\": {\n  \"exponent\": \"x\"\n }\n}")
            .unwrap_err();
        assert_eq!(err.field, "channel.exponent");
        assert_eq!(err.line, Some(3));
        assert!(err.to_string().contains("channel.exponent"));
    }
}
