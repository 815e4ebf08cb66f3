//! Built-in value generators, one per entity type.

use rand::Rng;

use super::{GenContext, ValueError};

pub const NAME: &str = "name";
pub const COMPANY: &str = "company";
pub const ADDRESS_MULTI_LINE: &str = "address_multi_line";
pub const DATE: &str = "date";
pub const PHONE: &str = "phone";
pub const EMAIL: &str = "email";
pub const CURRENCY_AMOUNT: &str = "currency_amount";
pub const ALPHANUMERIC_ID: &str = "alphanumeric_id";
pub const INTEGER_QUANTITY: &str = "integer_quantity";
pub const FREE_TEXT: &str = "free_text";

pub const BUILTIN_TYPES: &[&str] = &[
    NAME,
    COMPANY,
    ADDRESS_MULTI_LINE,
    DATE,
    PHONE,
    EMAIL,
    CURRENCY_AMOUNT,
    ALPHANUMERIC_ID,
    INTEGER_QUANTITY,
    FREE_TEXT,
];

pub(super) fn pick<'a>(ctx: &mut GenContext<'a>, list: &str) -> Result<&'a str, ValueError> {
    let options = ctx.locale.list(list);
    if options.is_empty() {
        return Err(ValueError::LocaleData(format!(
            "locale `{}` has no `{list}` entries",
            ctx.locale.tag
        )));
    }
    Ok(&options[ctx.rng.random_range(0..options.len())])
}

/// Expands `#` to a digit, `?` to an uppercase letter, `*` to either.
pub(super) fn fill_pattern(ctx: &mut GenContext<'_>, pattern: &str) -> String {
    const LETTERS: &[u8] = b"ABCDEFGHJKLMNPQRSTUVWXYZ";
    const ALNUM: &[u8] = b"0123456789ABCDEFGHJKLMNPQRSTUVWXYZ";
    pattern
        .chars()
        .map(|c| match c {
            '#' => char::from(b'0' + ctx.rng.random_range(0..10u8)),
            '?' => char::from(LETTERS[ctx.rng.random_range(0..LETTERS.len())]),
            '*' => char::from(ALNUM[ctx.rng.random_range(0..ALNUM.len())]),
            other => other,
        })
        .collect()
}

pub(super) fn name(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let first = pick(ctx, "first_names")?;
    let last = pick(ctx, "last_names")?;
    if ctx.locale.meta("address_style") == Some("street_first") && ctx.rng.random_bool(0.5) {
        let second = pick(ctx, "last_names")?;
        return Ok(format!("{first} {last} {second}"));
    }
    Ok(format!("{first} {last}"))
}

pub(super) fn company(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let word = pick(ctx, "company_words")?;
    let suffix = pick(ctx, "company_suffixes")?;
    Ok(format!("{word} {suffix}"))
}

pub(super) fn address_multi_line(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let number = ctx.rng.random_range(1..=9999u32);
    let street = pick(ctx, "streets")?;
    let street_type = pick(ctx, "street_types")?;
    let street_line = if ctx.locale.meta("address_style") == Some("street_first") {
        format!("{street_type} {street}, {number}")
    } else {
        format!("{number} {street} {street_type}")
    };
    let mut lines = vec![street_line];
    if ctx.rng.random_bool(0.35) {
        let unit = pick(ctx, "units")?;
        lines.push(format!("{unit} {}", ctx.rng.random_range(1..=40u32)));
    }
    let city = pick(ctx, "cities")?;
    let region = pick(ctx, "regions")?;
    let postal_pattern = ctx.locale.meta("postal_pattern").unwrap_or("#####").to_string();
    let postal = fill_pattern(ctx, &postal_pattern);
    if ctx.locale.meta("address_style") == Some("street_first") {
        lines.push(format!("{postal} {city} ({region})"));
    } else {
        lines.push(format!("{city}, {region} {postal}"));
    }
    if ctx.rng.random_bool(0.3) {
        lines.push(pick(ctx, "countries")?.to_string());
    }
    Ok(lines.join("\n"))
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 31,
    }
}

/// Renders `YYYY`, `MMMM` (month name), `MM`, `DD`, `D` tokens.
pub fn format_date(format: &str, year: u32, month: u32, day: u32, months: &[String]) -> String {
    let mut out = String::new();
    let mut rest = format;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("YYYY") {
            out.push_str(&format!("{year:04}"));
            rest = r;
        } else if let Some(r) = rest.strip_prefix("MMMM") {
            let idx = (month as usize).saturating_sub(1);
            out.push_str(months.get(idx).map(String::as_str).unwrap_or("?"));
            rest = r;
        } else if let Some(r) = rest.strip_prefix("MM") {
            out.push_str(&format!("{month:02}"));
            rest = r;
        } else if let Some(r) = rest.strip_prefix("DD") {
            out.push_str(&format!("{day:02}"));
            rest = r;
        } else if let Some(r) = rest.strip_prefix('D') {
            out.push_str(&day.to_string());
            rest = r;
        } else {
            let c = rest.chars().next().expect("non-empty");
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

pub(super) fn date(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let year = ctx.rng.random_range(2015..=2025u32);
    let month = ctx.rng.random_range(1..=12u32);
    let day = ctx.rng.random_range(1..=days_in_month(year, month));
    let format = match ctx.params.format.as_deref() {
        Some("iso") => "YYYY-MM-DD".to_string(),
        Some(f) => f.to_string(),
        None => {
            let options = ctx.locale.meta_options("date_formats");
            if options.is_empty() {
                "YYYY-MM-DD".to_string()
            } else {
                options[ctx.rng.random_range(0..options.len())].to_string()
            }
        }
    };
    Ok(format_date(&format, year, month, day, ctx.locale.list("months")))
}

pub(super) fn phone(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let pattern = match ctx.params.format.clone() {
        Some(p) => p,
        None => {
            let options = ctx.locale.meta_options("phone_patterns");
            if options.is_empty() {
                "###-###-####".to_string()
            } else {
                options[ctx.rng.random_range(0..options.len())].to_string()
            }
        }
    };
    Ok(fill_pattern(ctx, &pattern))
}

/// Lowercase ASCII with common Latin diacritics folded.
pub fn ascii_fold(text: &str) -> String {
    text.chars()
        .filter_map(|c| {
            let folded = match c {
                'á' | 'à' | 'ä' | 'â' | 'Á' | 'À' | 'Ä' | 'Â' => 'a',
                'é' | 'è' | 'ë' | 'ê' | 'É' | 'È' | 'Ë' | 'Ê' => 'e',
                'í' | 'ì' | 'ï' | 'î' | 'Í' | 'Ì' | 'Ï' | 'Î' => 'i',
                'ó' | 'ò' | 'ö' | 'ô' | 'Ó' | 'Ò' | 'Ö' | 'Ô' => 'o',
                'ú' | 'ù' | 'ü' | 'û' | 'Ú' | 'Ù' | 'Ü' | 'Û' => 'u',
                'ñ' | 'Ñ' => 'n',
                'ç' | 'Ç' => 'c',
                c if c.is_ascii_alphanumeric() => c.to_ascii_lowercase(),
                _ => return None,
            };
            Some(folded)
        })
        .collect()
}

pub(super) fn email(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let first = ascii_fold(pick(ctx, "first_names")?);
    let last = ascii_fold(pick(ctx, "last_names")?);
    let domain = pick(ctx, "email_domains")?;
    let sep = if ctx.rng.random_bool(0.5) { "." } else { "_" };
    Ok(format!("{first}{sep}{last}@{domain}"))
}

fn group_thousands(mut n: u64, sep: &str) -> String {
    let mut groups = Vec::new();
    loop {
        if n < 1000 {
            groups.push(n.to_string());
            break;
        }
        groups.push(format!("{:03}", n % 1000));
        n /= 1000;
    }
    groups.reverse();
    groups.join(sep)
}

/// Formats an amount given in cents with the locale's separators.
pub fn format_amount(cents: u64, decimal: &str, thousands: &str) -> String {
    format!(
        "{}{decimal}{:02}",
        group_thousands(cents / 100, thousands),
        cents % 100
    )
}

pub(super) fn currency_amount(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let lo = ctx.params.constraints.min.unwrap_or(1).max(0) as u64;
    let hi = ctx.params.constraints.max.unwrap_or(9_999).max(lo as i64) as u64;
    let cents = ctx.rng.random_range(lo * 100..=hi * 100);
    let decimal = ctx.locale.meta("decimal_separator").unwrap_or(".").to_string();
    let thousands = ctx.locale.meta("thousands_separator").unwrap_or(",").to_string();
    let amount = format_amount(cents, &decimal, &thousands);
    let symbol = match ctx.patterns.token("currency") {
        Some(token) => token.to_string(),
        None => ctx.locale.meta("currency_symbol").unwrap_or("$").to_string(),
    };
    if ctx.locale.meta("currency_position") == Some("suffix") {
        Ok(format!("{amount} {symbol}"))
    } else {
        Ok(format!("{symbol}{amount}"))
    }
}

pub(super) fn alphanumeric_id(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let pattern = ctx.params.format.clone().unwrap_or_else(|| "??-#####".to_string());
    Ok(fill_pattern(ctx, &pattern))
}

pub(super) fn integer_quantity(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let lo = ctx.params.constraints.min.unwrap_or(1);
    let hi = ctx.params.constraints.max.unwrap_or(100).max(lo);
    Ok(ctx.rng.random_range(lo..=hi).to_string())
}

pub(super) fn free_text(ctx: &mut GenContext<'_>) -> Result<String, ValueError> {
    let count = ctx.rng.random_range(2..=5usize);
    let mut words = Vec::with_capacity(count);
    for _ in 0..count {
        words.push(pick(ctx, "words")?);
    }
    let mut text = words.join(" ");
    if let Some(first) = text.chars().next() {
        let upper: String = first.to_uppercase().collect();
        text.replace_range(..first.len_utf8(), &upper);
    }
    Ok(text)
}
