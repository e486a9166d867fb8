//! Spy-plot style SVG rendering: nonzeros as dots, blocks as outlined
//! rectangles. Output is deterministic byte-for-byte.

use crate::matrix::SparseMatrix;
use crate::scheme::MappingScheme;
use std::fmt::Write as _;

const CANVAS: f64 = 640.0;
const MARGIN: f64 = 8.0;

/// Renders the matrix pattern with the scheme's blocks outlined on top.
/// Emits exactly one `<rect>` per block (diagonal blocks, then fills with
/// their mirrors) and one `<circle>` per nonzero.
pub fn render_svg(m: &SparseMatrix, s: &MappingScheme) -> String {
    let dim = m.dim() as f64;
    let scale = (CANVAS - 2.0 * MARGIN) / dim;
    let px = |v: usize| MARGIN + v as f64 * scale;
    let side = CANVAS as usize;

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{side}\" height=\"{side}\" \
         viewBox=\"0 0 {side} {side}\">"
    );
    let _ = writeln!(
        out,
        "<g fill=\"none\" stroke=\"#1f3a93\" stroke-width=\"{:.3}\">",
        (scale * 0.12).clamp(0.5, 2.0)
    );
    for (r, c, sz) in s.all_blocks() {
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\"/>",
            px(c),
            px(r),
            sz as f64 * scale,
            sz as f64 * scale
        );
    }
    out.push_str("</g>\n<g fill=\"#c0392b\">\n");
    let radius = (scale * 0.35).clamp(0.6, 4.0);
    for &(r, c, _) in m.entries() {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{radius:.2}\"/>",
            px(c) + 0.5 * scale,
            px(r) + 0.5 * scale
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
