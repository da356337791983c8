//! Domain categories for per-category statistics.

use std::collections::HashMap;

pub const OTHER: &str = "Other";

/// Known category labels.
pub const CATEGORIES: [&str; 10] = [
    "Education",
    "Government",
    "Technology",
    "News/Media",
    "E-commerce",
    "Hosting/Platform",
    "Open Knowledge",
    "Research",
    "EU Institutions",
    OTHER,
];

/// Guesses a category from the public suffix: `.edu`/`.ac.*` are
/// Education, `.gov`/`.go.*`/`.mil` are Government, everything else Other.
pub fn default_category(domain: &str) -> &'static str {
    let domain = domain.trim().trim_end_matches('.').to_ascii_lowercase();
    for label in domain.split('.').skip(1) {
        match label {
            "edu" | "ac" => return "Education",
            "gov" | "go" | "mil" => return "Government",
            _ => {}
        }
    }
    OTHER
}

/// User-supplied domain → category assignments, falling back to
/// [`default_category`].
#[derive(Debug, Clone, Default)]
pub struct CategoryMap {
    overrides: HashMap<String, String>,
}

impl CategoryMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, domain: &str, category: &str) {
        self.overrides.insert(domain.trim().to_ascii_lowercase(), category.trim().to_string());
    }

    pub fn category(&self, domain: &str) -> String {
        self.overrides
            .get(&domain.trim().to_ascii_lowercase())
            .cloned()
            .unwrap_or_else(|| default_category(domain).to_string())
    }

    pub fn len(&self) -> usize {
        self.overrides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.overrides.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_heuristics() {
        assert_eq!(default_category("adelaide.edu.au"), "Education");
        assert_eq!(default_category("unt.edu"), "Education");
        assert_eq!(default_category("ncl.ac.uk"), "Education");
        assert_eq!(default_category("af.mil"), "Government");
        assert_eq!(default_category("usa.gov"), "Government");
        assert_eq!(default_category("metro.tokyo.go.jp"), "Government");
        assert_eq!(default_category("alberta.ca"), "Other");
        assert_eq!(default_category("edu.com"), "Other");
    }

    #[test]
    fn overrides_win() {
        let mut map = CategoryMap::new();
        map.insert("Wikipedia.org", "Open Knowledge");
        map.insert("kit.edu", "Research");
        assert_eq!(map.category("wikipedia.org"), "Open Knowledge");
        assert_eq!(map.category("kit.edu"), "Research");
        assert_eq!(map.category("mit.edu"), "Education");
    }
}
