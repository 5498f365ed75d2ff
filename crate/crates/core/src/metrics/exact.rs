/// 1 iff the snippets are identical once trailing whitespace is trimmed from each line.
pub fn exact_match(pred: &str, reference: &str) -> f64 {
    let same = pred
        .split('\n')
        .map(str::trim_end)
        .eq(reference.split('\n').map(str::trim_end));
    if same {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cases() {
        assert_eq!(exact_match("add EAX, EBX", "add EAX, EBX"), 1.0);
        assert_eq!(
            exact_match("for byte in encoder:", "for bytes in encoder:"),
            0.0
        );
        assert_eq!(exact_match("", ""), 1.0);
        assert_eq!(exact_match("a  \nb\t", "a\nb"), 1.0);
        assert_eq!(exact_match(" a", "a"), 0.0);
        assert_eq!(exact_match("a\nb", "a b"), 0.0);
    }
}
