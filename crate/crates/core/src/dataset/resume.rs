use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::pools::{GeneratorPools, Section};
use crate::eval::TruthValue;

/// Ground truth for one generated resume. Each value, and each list
/// element, occurs verbatim in the rendered text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResumeTruth {
    pub name: String,
    pub address: String,
    pub email: String,
    pub phone: String,
    pub education: String,
    pub job_title: String,
    pub languages: Vec<String>,
    pub hard_skills: Vec<String>,
    pub soft_skills: Vec<String>,
}

impl ResumeTruth {
    pub const FIELDS: [&'static str; 9] = [
        "name",
        "address",
        "email",
        "phone",
        "education",
        "job_title",
        "languages",
        "hard_skills",
        "soft_skills",
    ];

    /// Field map in the corpus truth format.
    pub fn to_map(&self) -> BTreeMap<String, Option<TruthValue>> {
        let one = |s: &String| Some(TruthValue::One(s.clone()));
        let many = |v: &Vec<String>| Some(TruthValue::Many(v.clone()));
        BTreeMap::from([
            ("name".to_string(), one(&self.name)),
            ("address".to_string(), one(&self.address)),
            ("email".to_string(), one(&self.email)),
            ("phone".to_string(), one(&self.phone)),
            ("education".to_string(), one(&self.education)),
            ("job_title".to_string(), one(&self.job_title)),
            ("languages".to_string(), many(&self.languages)),
            ("hard_skills".to_string(), many(&self.hard_skills)),
            ("soft_skills".to_string(), many(&self.soft_skills)),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparatorStyle {
    /// A row of "—" under every section title.
    EmDashRule,
    /// A row of "=" under every section title.
    EqualsRule,
    /// A blank line between sections and no rules.
    Blank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TitleCase {
    AsIs,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ListStyle {
    Bullets,
    Inline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContactLabels {
    pub address: String,
    pub email: String,
    pub phone: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutDescriptor {
    pub section_order: Vec<Section>,
    pub section_titles: BTreeMap<Section, String>,
    pub separator: SeparatorStyle,
    pub title_case: TitleCase,
    pub list_style: ListStyle,
    pub bullet: String,
    pub contact_labels: ContactLabels,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedDoc {
    pub text: String,
    pub layout_descriptor: LayoutDescriptor,
    pub seed: u64,
}

const ADDRESS_LABELS: [&str; 4] = ["Address", "Home address", "Adres", "Location"];
const EMAIL_LABELS: [&str; 4] = ["E-mail", "Mail", "Contact", "Email"];
const PHONE_LABELS: [&str; 4] = ["Phone", "Telephone", "Mobile", "Tel"];
const BULLETS: [&str; 3] = ["-", "*", "•"];
const PROFILE_OPENERS: [&str; 4] = [
    "Motivated professional with {years} years of experience.",
    "Experienced professional with {years} years in the field.",
    "Reliable and driven, with {years} years of relevant experience.",
    "Professional with {years} years of experience and a passion for learning.",
];

/// Lowercase ASCII letters of a name part, accents and particle spaces removed.
fn email_part(s: &str) -> String {
    s.nfd()
        .filter(char::is_ascii_alphanumeric)
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

fn pick<'a>(rng: &mut SplitMix64, items: &'a [String]) -> &'a String {
    items.choose(rng).expect("pools are non-empty")
}

fn pick_str(rng: &mut SplitMix64, items: &[&'static str]) -> &'static str {
    items.choose(rng).expect("non-empty")
}

fn sample(rng: &mut SplitMix64, items: &[String], lo: usize, hi: usize) -> Vec<String> {
    let n = rng.random_range(lo..=hi).min(items.len());
    items.sample(rng, n).cloned().collect()
}

fn digits(rng: &mut SplitMix64, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
}

/// Builds one resume. Every choice comes from a SplitMix64 stream seeded
/// with `seed`, so output depends only on the seed and the pools.
pub fn generate_resume(pools: &GeneratorPools, seed: u64) -> (ResumeTruth, RenderedDoc) {
    let rng = &mut SplitMix64::seed_from_u64(seed);

    let first = pick(rng, &pools.first_names).clone();
    let middle = rng
        .random_bool(0.2)
        .then(|| pick(rng, &pools.first_names).clone())
        .filter(|m| *m != first);
    let last = pick(rng, &pools.last_names).clone();
    let name = match &middle {
        Some(m) => format!("{first} {m} {last}"),
        None => format!("{first} {last}"),
    };

    let street = pick(rng, &pools.streets).clone();
    let number = rng.random_range(1..=250u32);
    let postcode = format!(
        "{}{} {}{}",
        rng.random_range(1..=9u8),
        digits(rng, 3),
        char::from(b'A' + rng.random_range(0..26u8)),
        char::from(b'A' + rng.random_range(0..26u8)),
    );
    let city = pick(rng, &pools.cities).clone();
    let address = format!("{street} {number}, {postcode} {city}");

    let (f, l) = (email_part(&first), email_part(&last));
    let local = match rng.random_range(0..3u8) {
        0 => format!("{f}.{l}"),
        1 => format!("{}.{l}", &f[..1]),
        _ => format!("{f}{l}"),
    };
    let email = format!("{local}@{}", pick(rng, &pools.email_domains));
    let phone = if rng.random_bool(0.5) {
        format!("+31 6 {}", digits(rng, 8))
    } else {
        format!("06-{}", digits(rng, 8))
    };

    let job_title = pick(rng, &pools.occupations).clone();
    let education = pick(rng, &pools.academic_backgrounds).clone();
    let hard_skills = sample(rng, &pools.hard_skills, 3, 6);
    let soft_skills = sample(rng, &pools.soft_skills, 2, 4);
    let languages = sample(rng, &pools.languages, 1, 3);
    let levels: Vec<String> = languages
        .iter()
        .map(|_| pick(rng, &pools.language_levels).clone())
        .collect();

    let mut section_order = Section::ALL.to_vec();
    section_order.shuffle(rng);
    let section_titles: BTreeMap<Section, String> = Section::ALL
        .iter()
        .map(|&s| (s, pick(rng, &pools.section_synonyms[&s]).clone()))
        .collect();
    let layout = LayoutDescriptor {
        section_order,
        section_titles,
        separator: *[
            SeparatorStyle::EmDashRule,
            SeparatorStyle::EqualsRule,
            SeparatorStyle::Blank,
        ]
        .choose(rng)
        .unwrap(),
        title_case: *[TitleCase::AsIs, TitleCase::Upper].choose(rng).unwrap(),
        list_style: *[ListStyle::Bullets, ListStyle::Inline].choose(rng).unwrap(),
        bullet: pick_str(rng, &BULLETS).to_string(),
        contact_labels: ContactLabels {
            address: pick_str(rng, &ADDRESS_LABELS).to_string(),
            email: pick_str(rng, &EMAIL_LABELS).to_string(),
            phone: pick_str(rng, &PHONE_LABELS).to_string(),
        },
    };

    let end_year = rng.random_range(2019..=2025u32);
    let n_jobs = rng.random_range(1..=3usize);
    let mut jobs = Vec::new();
    let mut year = end_year;
    for i in 0..n_jobs {
        let span = rng.random_range(1..=5u32);
        let title = if i == 0 {
            job_title.clone()
        } else {
            pick(rng, &pools.occupations).clone()
        };
        let end = if i == 0 {
            "present".to_string()
        } else {
            year.to_string()
        };
        let company = pick(rng, &pools.companies).clone();
        let duties = sample(rng, &pools.work_experiences, 1, 2);
        jobs.push((year - span, end, title, company, duties));
        year -= span;
    }
    let grad_year = year - rng.random_range(0..=2u32);
    let years_total = end_year - year;
    let opener = pick_str(rng, &PROFILE_OPENERS).replace("{years}", &years_total.max(1).to_string());

    let list = |items: &[String]| -> Vec<String> {
        match layout.list_style {
            ListStyle::Bullets => items.iter().map(|s| format!("{} {s}", layout.bullet)).collect(),
            ListStyle::Inline => vec![items.join(", ")],
        }
    };
    let mut body = BTreeMap::new();
    body.insert(
        Section::Contact,
        vec![
            format!("{}: {address}", layout.contact_labels.address),
            format!("{}: {email}", layout.contact_labels.email),
            format!("{}: {phone}", layout.contact_labels.phone),
        ],
    );
    body.insert(Section::Profile, vec![opener]);
    let mut exp = Vec::new();
    for (start, end, title, company, duties) in &jobs {
        exp.push(format!("{start} - {end}  {title} at {company}"));
        exp.extend(duties.iter().map(|d| format!("{} {d}.", layout.bullet)));
    }
    body.insert(Section::Experience, exp);
    body.insert(
        Section::Education,
        vec![format!("{education} (graduated {grad_year})")],
    );
    body.insert(Section::HardSkills, list(&hard_skills));
    body.insert(Section::SoftSkills, list(&soft_skills));
    let spoken: Vec<String> = languages
        .iter()
        .zip(&levels)
        .map(|(lang, level)| format!("{lang} ({level})"))
        .collect();
    body.insert(Section::Languages, list(&spoken));

    let rule_len = rng.random_range(16..=40usize);
    let mut text = format!("{name}\n{job_title}\n");
    if layout.separator != SeparatorStyle::Blank {
        text.push_str(&"—".repeat(rule_len));
        text.push('\n');
    }
    for section in &layout.section_order {
        let title = &layout.section_titles[section];
        text.push('\n');
        match layout.title_case {
            TitleCase::AsIs => text.push_str(title),
            TitleCase::Upper => text.push_str(&title.to_uppercase()),
        }
        text.push('\n');
        match layout.separator {
            SeparatorStyle::EmDashRule => text.push_str(&"—".repeat(title.chars().count())),
            SeparatorStyle::EqualsRule => text.push_str(&"=".repeat(title.chars().count())),
            SeparatorStyle::Blank => {}
        }
        if layout.separator != SeparatorStyle::Blank {
            text.push('\n');
        }
        for line in &body[section] {
            text.push_str(line);
            text.push('\n');
        }
    }

    let truth = ResumeTruth {
        name,
        address,
        email,
        phone,
        education,
        job_title,
        languages,
        hard_skills,
        soft_skills,
    };
    let doc = RenderedDoc {
        text,
        layout_descriptor: layout,
        seed,
    };
    (truth, doc)
}
