use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use super::pools::GeneratorPools;
use crate::eval::TruthValue;

/// Ground truth of a small invoice-like fixture; every value occurs
/// verbatim in the text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvoiceTruth {
    pub seller: String,
    pub address: String,
    pub email: String,
    pub website: String,
    pub iban: String,
    pub vat_number: String,
    pub invoice_date: String,
    pub total_amount: String,
}

impl InvoiceTruth {
    pub fn to_map(&self) -> BTreeMap<String, Option<TruthValue>> {
        [
            ("seller", &self.seller),
            ("address", &self.address),
            ("email", &self.email),
            ("website", &self.website),
            ("iban", &self.iban),
            ("vat_number", &self.vat_number),
            ("invoice_date", &self.invoice_date),
            ("total_amount", &self.total_amount),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), Some(TruthValue::One(v.clone()))))
        .collect()
    }
}

const TRADES: [&str; 6] = ["Consultancy", "Logistics", "Techniek", "Solutions", "Design", "Installaties"];
const BANKS: [&str; 6] = ["ABNA", "RABO", "INGB", "TRIO", "SNSB", "KNAB"];
const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

fn digits(rng: &mut SplitMix64, n: usize) -> String {
    (0..n).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
}

/// Check digits that make `country ++ cc ++ bban` pass ISO 13616.
pub fn iban_check_digits(country: &str, bban: &str) -> String {
    let mut rem: u32 = 0;
    for c in bban.chars().chain(country.chars()).chain("00".chars()) {
        let v = c.to_digit(36).expect("alphanumeric");
        rem = if v >= 10 { (rem * 100 + v) % 97 } else { (rem * 10 + v) % 97 };
    }
    format!("{:02}", 98 - rem)
}

/// A one-page invoice in English with one value per field.
pub fn generate_invoice(pools: &GeneratorPools, seed: u64) -> (InvoiceTruth, String) {
    let rng = &mut SplitMix64::seed_from_u64(seed);
    let surnames: Vec<&String> = pools
        .last_names
        .iter()
        .filter(|n| n.chars().next().is_some_and(char::is_uppercase) && !n.contains(' '))
        .collect();
    let owner = *surnames.choose(rng).expect("capitalised surname in pool");
    let trade = *TRADES.choose(rng).unwrap();
    let seller = format!("{owner} {trade} B.V.");
    let slug = format!("{owner}{trade}").to_lowercase();

    let street = pools.streets.choose(rng).unwrap();
    let city = pools.cities.choose(rng).unwrap();
    let address = format!(
        "{street} {}, {}{} {}{} {city}",
        rng.random_range(1..=250u32),
        rng.random_range(1..=9u8),
        digits(rng, 3),
        char::from(b'A' + rng.random_range(0..26u8)),
        char::from(b'A' + rng.random_range(0..26u8)),
    );
    let website = format!("www.{slug}.nl");
    let email = format!("info@{slug}.nl");
    let bban = format!("{}{}", BANKS.choose(rng).unwrap(), digits(rng, 10));
    let compact = format!("NL{}{bban}", iban_check_digits("NL", &bban));
    let iban = if rng.random_bool(0.5) {
        compact
            .as_bytes()
            .chunks(4)
            .map(|c| std::str::from_utf8(c).unwrap())
            .collect::<Vec<_>>()
            .join(" ")
    } else {
        compact
    };
    let vat_number = format!("NL{}B{}", digits(rng, 9), digits(rng, 2));
    let (day, month, year) = (
        rng.random_range(1..=28u32),
        rng.random_range(1..=12usize),
        rng.random_range(2019..=2025u32),
    );
    let invoice_date = if rng.random_bool(0.5) {
        format!("{day:02}-{month:02}-{year}")
    } else {
        format!("{day} {} {year}", MONTHS[month - 1])
    };
    let cents = rng.random_range(5_000..=2_500_000u64);
    let euros = (cents / 100).to_string();
    let mut grouped = String::new();
    for (i, c) in euros.chars().enumerate() {
        if i > 0 && (euros.len() - i) % 3 == 0 {
            grouped.push('.');
        }
        grouped.push(c);
    }
    let total_amount = format!("€ {grouped},{:02}", cents % 100);

    let text = format!(
        "{seller}\n{address}\n{website}\nE-mail: {email}\n\nINVOICE {year}-{:04}\nInvoice date: {invoice_date}\n\nServices delivered as agreed.\n\nTotal: {total_amount}\n\nPlease transfer the amount to {iban}\nVAT number: {vat_number}\n",
        rng.random_range(1..=9999u32),
    );
    let truth = InvoiceTruth {
        seller,
        address,
        email,
        website,
        iban,
        vat_number,
        invoice_date,
        total_amount,
    };
    (truth, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::{iban_is_valid, Category, PatternCatalog};
    use proptest::prelude::*;

    #[test]
    fn known_check_digits() {
        assert_eq!(iban_check_digits("NL", "ABNA0417164300"), "91");
        assert_eq!(iban_check_digits("GB", "WEST12345698765432"), "82");
    }

    proptest! {
        #[test]
        fn fields_found_by_catalog(seed in any::<u64>()) {
            let (t, text) = generate_invoice(&GeneratorPools::builtin(), seed);
            prop_assert!(iban_is_valid(&t.iban.replace(' ', "")));
            let catalog = PatternCatalog::builtin();
            for (cat, want) in [
                (Category::Email, &t.email),
                (Category::Website, &t.website),
                (Category::Iban, &t.iban),
                (Category::VatNumber, &t.vat_number),
                (Category::Date, &t.invoice_date),
                (Category::Amount, &t.total_amount),
                (Category::Address, &t.address),
            ] {
                let found: Vec<String> =
                    catalog.find(&text, cat).unwrap().into_iter().map(|m| m.value).collect();
                prop_assert_eq!(&found, &vec![want.clone()], "{} in\n{}", cat, text);
            }
        }
    }
}
