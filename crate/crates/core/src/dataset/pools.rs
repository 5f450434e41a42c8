use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DatasetError;

/// Resume sections whose titles are drawn from synonym lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Contact,
    Profile,
    Experience,
    Education,
    HardSkills,
    SoftSkills,
    Languages,
}

impl Section {
    pub const ALL: [Section; 7] = [
        Section::Contact,
        Section::Profile,
        Section::Experience,
        Section::Education,
        Section::HardSkills,
        Section::SoftSkills,
        Section::Languages,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Section::Contact => "contact",
            Section::Profile => "profile",
            Section::Experience => "experience",
            Section::Education => "education",
            Section::HardSkills => "hard_skills",
            Section::SoftSkills => "soft_skills",
            Section::Languages => "languages",
        }
    }

    fn from_key(key: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.key() == key)
    }
}

pub const OCCUPATIONS: usize = 70;
pub const WORK_EXPERIENCES: usize = 50;
pub const ACADEMIC_BACKGROUNDS: usize = 30;
pub const MIN_SYNONYMS: usize = 4;
/// Titles the skills section must be able to take.
pub const SKILL_TITLES: [&str; 4] = ["Competencies", "Talents", "Skillset", "Strengths"];

/// Pool file names, in digest order.
pub const POOL_FILES: [&str; 14] = [
    "academic_backgrounds.txt",
    "cities.txt",
    "companies.txt",
    "email_domains.txt",
    "first_names.txt",
    "hard_skills.txt",
    "language_levels.txt",
    "languages.txt",
    "last_names.txt",
    "occupations.txt",
    "section_synonyms.txt",
    "soft_skills.txt",
    "streets.txt",
    "work_experiences.txt",
];

macro_rules! builtin_file {
    ($name:literal) => {
        ($name, include_str!(concat!("../../data/pools/", $name)))
    };
}

const BUILTIN: [(&str, &str); 14] = [
    builtin_file!("academic_backgrounds.txt"),
    builtin_file!("cities.txt"),
    builtin_file!("companies.txt"),
    builtin_file!("email_domains.txt"),
    builtin_file!("first_names.txt"),
    builtin_file!("hard_skills.txt"),
    builtin_file!("language_levels.txt"),
    builtin_file!("languages.txt"),
    builtin_file!("last_names.txt"),
    builtin_file!("occupations.txt"),
    builtin_file!("section_synonyms.txt"),
    builtin_file!("soft_skills.txt"),
    builtin_file!("streets.txt"),
    builtin_file!("work_experiences.txt"),
];

/// Content pools for the resume generator. Every list is non-empty and
/// duplicate-free; the three content pools have their fixed sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorPools {
    pub occupations: Vec<String>,
    pub work_experiences: Vec<String>,
    pub academic_backgrounds: Vec<String>,
    pub section_synonyms: BTreeMap<Section, Vec<String>>,
    pub first_names: Vec<String>,
    pub last_names: Vec<String>,
    pub streets: Vec<String>,
    pub cities: Vec<String>,
    pub email_domains: Vec<String>,
    pub companies: Vec<String>,
    pub hard_skills: Vec<String>,
    pub soft_skills: Vec<String>,
    pub languages: Vec<String>,
    pub language_levels: Vec<String>,
    digest: String,
}

fn lines(file: &str, data: &str) -> Result<Vec<String>, DatasetError> {
    let items: Vec<String> = data
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect();
    let unique: BTreeSet<&String> = items.iter().collect();
    if items.is_empty() {
        return Err(DatasetError::Pool {
            file: file.into(),
            message: "empty pool".into(),
        });
    }
    if unique.len() != items.len() {
        return Err(DatasetError::Pool {
            file: file.into(),
            message: "duplicate entries".into(),
        });
    }
    Ok(items)
}

fn exact(file: &str, items: Vec<String>, n: usize) -> Result<Vec<String>, DatasetError> {
    if items.len() != n {
        return Err(DatasetError::Pool {
            file: file.into(),
            message: format!("expected {n} entries, found {}", items.len()),
        });
    }
    Ok(items)
}

// Lines of the form `section_key: Title | Title | ...`.
fn parse_synonyms(file: &str, data: &str) -> Result<BTreeMap<Section, Vec<String>>, DatasetError> {
    let err = |message: String| DatasetError::Pool {
        file: file.into(),
        message,
    };
    let mut map = BTreeMap::new();
    for line in lines(file, data)? {
        let (key, titles) = line
            .split_once(':')
            .ok_or_else(|| err(format!("missing ':' in {line:?}")))?;
        let section =
            Section::from_key(key.trim()).ok_or_else(|| err(format!("unknown section {key:?}")))?;
        let titles: Vec<String> = titles
            .split('|')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect();
        if titles.len() < MIN_SYNONYMS {
            return Err(err(format!("{} needs at least {MIN_SYNONYMS} titles", section.key())));
        }
        if map.insert(section, titles).is_some() {
            return Err(err(format!("section {} listed twice", section.key())));
        }
    }
    if let Some(missing) = Section::ALL.iter().find(|s| !map.contains_key(s)) {
        return Err(err(format!("no titles for section {}", missing.key())));
    }
    let skills = &map[&Section::HardSkills];
    if let Some(t) = SKILL_TITLES.iter().find(|t| !skills.iter().any(|s| s == *t)) {
        return Err(err(format!("skills titles must include {t:?}")));
    }
    Ok(map)
}

impl GeneratorPools {
    /// Pools bundled with the crate.
    pub fn builtin() -> Self {
        Self::from_files(|name| {
            BUILTIN
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, d)| d.to_string())
                .ok_or_else(|| DatasetError::Io(format!("missing builtin pool {name}")))
        })
        .expect("bundled pools are valid")
    }

    /// Reads every pool file from `dir`.
    pub fn load(dir: &Path) -> Result<Self, DatasetError> {
        Self::from_files(|name| {
            let path = dir.join(name);
            std::fs::read_to_string(&path)
                .map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))
        })
    }

    fn from_files(read: impl Fn(&str) -> Result<String, DatasetError>) -> Result<Self, DatasetError> {
        let mut data = BTreeMap::new();
        let mut hasher = Sha256::new();
        for name in POOL_FILES {
            let content = read(name)?;
            hasher.update(name.as_bytes());
            hasher.update([0]);
            hasher.update(content.as_bytes());
            hasher.update([0]);
            data.insert(name, content);
        }
        let list = |name: &str| lines(name, &data[name]);
        Ok(Self {
            occupations: exact("occupations.txt", list("occupations.txt")?, OCCUPATIONS)?,
            work_experiences: exact(
                "work_experiences.txt",
                list("work_experiences.txt")?,
                WORK_EXPERIENCES,
            )?,
            academic_backgrounds: exact(
                "academic_backgrounds.txt",
                list("academic_backgrounds.txt")?,
                ACADEMIC_BACKGROUNDS,
            )?,
            section_synonyms: parse_synonyms("section_synonyms.txt", &data["section_synonyms.txt"])?,
            first_names: list("first_names.txt")?,
            last_names: list("last_names.txt")?,
            streets: list("streets.txt")?,
            cities: list("cities.txt")?,
            email_domains: list("email_domains.txt")?,
            companies: list("companies.txt")?,
            hard_skills: list("hard_skills.txt")?,
            soft_skills: list("soft_skills.txt")?,
            languages: list("languages.txt")?,
            language_levels: list("language_levels.txt")?,
            digest: hex::encode(hasher.finalize()),
        })
    }

    /// SHA-256 over the pool files in [`POOL_FILES`] order. Any pool edit
    /// changes it.
    pub fn digest(&self) -> &str {
        &self.digest
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_sizes() {
        let p = GeneratorPools::builtin();
        assert_eq!(p.occupations.len(), 70);
        assert_eq!(p.work_experiences.len(), 50);
        assert_eq!(p.academic_backgrounds.len(), 30);
        for s in Section::ALL {
            assert!(p.section_synonyms[&s].len() >= 4);
        }
        for t in SKILL_TITLES {
            assert!(p.section_synonyms[&Section::HardSkills].iter().any(|x| x == t));
        }
        assert_eq!(p.digest().len(), 64);
    }

    fn copy_builtin(dir: &Path) {
        for (name, data) in BUILTIN {
            std::fs::write(dir.join(name), data).unwrap();
        }
    }

    #[test]
    fn load_from_dir_and_digest_tracks_edits() {
        let dir = tempfile::tempdir().unwrap();
        copy_builtin(dir.path());
        let loaded = GeneratorPools::load(dir.path()).unwrap();
        assert_eq!(loaded, GeneratorPools::builtin());

        let mut cities = BUILTIN[1].1.to_string();
        cities.push_str("Bunnik\n");
        std::fs::write(dir.path().join("cities.txt"), cities).unwrap();
        let edited = GeneratorPools::load(dir.path()).unwrap();
        assert_ne!(edited.digest(), loaded.digest());
    }

    #[test]
    fn wrong_sizes_rejected() {
        let dir = tempfile::tempdir().unwrap();
        copy_builtin(dir.path());
        std::fs::write(dir.path().join("occupations.txt"), "Baker\nChef\n").unwrap();
        assert!(matches!(
            GeneratorPools::load(dir.path()),
            Err(DatasetError::Pool { .. })
        ));
        copy_builtin(dir.path());
        std::fs::write(
            dir.path().join("section_synonyms.txt"),
            BUILTIN[10].1.replace("Talents | ", ""),
        )
        .unwrap();
        assert!(GeneratorPools::load(dir.path()).is_err());
    }
}
