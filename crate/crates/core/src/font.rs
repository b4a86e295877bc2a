//! Tiny 5x7 bitmap font for rank indices and overlay labels.

const ROWS: usize = 7;

fn glyph(c: char) -> Option<[&'static str; ROWS]> {
    Some(match c {
        '0' => ["01110", "10001", "10011", "10101", "11001", "10001", "01110"],
        '1' => ["00100", "01100", "00100", "00100", "00100", "00100", "01110"],
        '2' => ["01110", "10001", "00001", "00010", "00100", "01000", "11111"],
        '3' => ["11111", "00010", "00100", "00010", "00001", "10001", "01110"],
        '4' => ["00010", "00110", "01010", "10010", "11111", "00010", "00010"],
        '5' => ["11111", "10000", "11110", "00001", "00001", "10001", "01110"],
        '6' => ["00110", "01000", "10000", "11110", "10001", "10001", "01110"],
        '7' => ["11111", "00001", "00010", "00100", "01000", "01000", "01000"],
        '8' => ["01110", "10001", "10001", "01110", "10001", "10001", "01110"],
        '9' => ["01110", "10001", "10001", "01111", "00001", "00010", "01100"],
        'A' => ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
        'B' => ["11110", "10001", "10001", "11110", "10001", "10001", "11110"],
        'C' => ["01110", "10001", "10000", "10000", "10000", "10001", "01110"],
        'J' => ["00111", "00010", "00010", "00010", "00010", "10010", "01100"],
        'K' => ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
        'Q' => ["01110", "10001", "10001", "10001", "10101", "10010", "01101"],
        '.' => ["00000", "00000", "00000", "00000", "00000", "01100", "01100"],
        ',' => ["00000", "00000", "00000", "00000", "01100", "00100", "01000"],
        ' ' => ["00000", "00000", "00000", "00000", "00000", "00000", "00000"],
        '\'' => ["00100", "00100", "01000", "00000", "00000", "00000", "00000"],
        _ => return None,
    })
}

/// Rasterised text as a row-major grid of lit cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub cols: usize,
    pub rows: usize,
    cells: Vec<bool>,
}

impl Bitmap {
    pub fn lit(&self, col: usize, row: usize) -> bool {
        col < self.cols && row < self.rows && self.cells[row * self.cols + col]
    }

    /// Nearest-cell lookup for normalised coordinates in `[0, 1)`.
    pub fn sample(&self, u: f64, v: f64) -> bool {
        if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
            return false;
        }
        self.lit((u * self.cols as f64) as usize, (v * self.rows as f64) as usize)
    }
}

/// Renders `text` with one blank column between glyphs. A leading `1` is
/// trimmed to its three inked columns so "10" stays compact. Unknown
/// characters render as blanks.
pub fn render_text(text: &str) -> Bitmap {
    let mut columns: Vec<[bool; ROWS]> = Vec::new();
    for (i, c) in text.chars().enumerate() {
        if i > 0 {
            columns.push([false; ROWS]);
        }
        let g = glyph(c.to_ascii_uppercase()).unwrap_or_else(|| glyph(' ').expect("space"));
        let range = if c == '1' && text.len() > 1 { 1..4 } else { 0..5 };
        for col in range {
            let mut column = [false; ROWS];
            for (row, line) in g.iter().enumerate() {
                column[row] = line.as_bytes()[col] == b'1';
            }
            columns.push(column);
        }
    }
    let cols = columns.len();
    let mut cells = vec![false; cols * ROWS];
    for (c, column) in columns.iter().enumerate() {
        for (r, &on) in column.iter().enumerate() {
            cells[r * cols + c] = on;
        }
    }
    Bitmap { cols, rows: ROWS, cells }
}
