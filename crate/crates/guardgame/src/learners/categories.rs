//! The fixed 12-category moderation taxonomy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of harm subcategories a classifier scores.
pub const CATEGORY_COUNT: usize = 12;

/// Ordered set of exactly twelve category identifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct CategorySet {
    names: Vec<String>,
}

impl CategorySet {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.len() != CATEGORY_COUNT {
            return Err(Error::Config(format!(
                "category set needs exactly {CATEGORY_COUNT} entries, got {}",
                names.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &names {
            if !seen.insert(name.clone()) {
                return Err(Error::Config(format!("duplicate category name {name:?}")));
            }
        }
        Ok(Self { names })
    }

    /// The default harm taxonomy.
    pub fn default_taxonomy() -> Self {
        Self {
            names: [
                "violent_crimes",
                "non_violent_crimes",
                "sex_related_crimes",
                "child_sexual_exploitation",
                "specialized_advice",
                "privacy",
                "intellectual_property",
                "indiscriminate_weapons",
                "hate",
                "suicide_and_self_harm",
                "sexual_content",
                "jailbreak_prompts",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

impl Default for CategorySet {
    fn default() -> Self {
        Self::default_taxonomy()
    }
}

impl TryFrom<Vec<String>> for CategorySet {
    type Error = Error;
    fn try_from(names: Vec<String>) -> Result<Self> {
        Self::new(names)
    }
}

impl From<CategorySet> for Vec<String> {
    fn from(c: CategorySet) -> Self {
        c.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_taxonomy_has_twelve_unique_names() {
        let set = CategorySet::default_taxonomy();
        assert_eq!(set.names().len(), CATEGORY_COUNT);
        assert_eq!(set.index_of("hate"), Some(8));
        assert_eq!(set.index_of("nonexistent"), None);
    }

    #[test]
    fn rejects_wrong_cardinality_and_duplicates() {
        assert!(CategorySet::new(vec!["a".into(); 5]).is_err());
        let mut names: Vec<String> = (0..CATEGORY_COUNT).map(|i| format!("c{i}")).collect();
        assert!(CategorySet::new(names.clone()).is_ok());
        names[3] = "c0".into();
        assert!(CategorySet::new(names).is_err());
    }
}
