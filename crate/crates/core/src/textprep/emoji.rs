/// Inclusive code point ranges treated as emoji.
///
/// Miscellaneous Symbols and Dingbats (U+2600..=U+27BF), Miscellaneous
/// Symbols and Pictographs, Emoticons, Transport and Map Symbols, and
/// Supplemental Symbols and Pictographs.
pub const EMOJI_RANGES: &[(u32, u32)] = &[
    (0x2600, 0x27BF),
    (0x1F300, 0x1F5FF),
    (0x1F600, 0x1F64F),
    (0x1F680, 0x1F6FF),
    (0x1F900, 0x1F9FF),
];

/// True iff `c` lies in one of the [`EMOJI_RANGES`].
pub fn detect_emoji(c: char) -> bool {
    let cp = c as u32;
    EMOJI_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

/// Scalars that only modify a preceding emoji: variation selector 16,
/// zero width joiner and the combining enclosing keycap.
pub(crate) fn is_emoji_modifier(c: char) -> bool {
    matches!(c, '\u{FE0F}' | '\u{200D}' | '\u{20E3}')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_emoji_and_ascii() {
        assert!(detect_emoji('\u{1F600}'));
        assert!(!detect_emoji('a'));
    }

    #[test]
    fn heavy_black_heart_is_in_dingbats() {
        assert!(detect_emoji('\u{2764}'));
    }

    #[test]
    fn range_edges() {
        for &(lo, hi) in EMOJI_RANGES {
            assert!(detect_emoji(char::from_u32(lo).unwrap()));
            assert!(detect_emoji(char::from_u32(hi).unwrap()));
        }
        assert!(!detect_emoji('\u{25FF}'));
        assert!(!detect_emoji('\u{27C0}'));
        assert!(!detect_emoji('\u{1F650}'));
        assert!(!detect_emoji('\u{1F8FF}'));
        assert!(!detect_emoji('\u{FE0F}'));
    }
}
