//! Walsh-Hadamard spreading and chip mapping onto the time-frequency grid.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// The `Lc x Nu` real orthogonal code matrix.
///
/// Column `j` is column `j` of the Sylvester-Hadamard matrix of order `Lc`,
/// normalized by `1/sqrt(Lc)` so that despreading needs no rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingMatrix {
    length: usize,
    num_users: usize,
    /// Column-major, one code per column.
    entries: Vec<f64>,
}

impl SpreadingMatrix {
    pub const MAX_LENGTH: usize = 1024;

    /// First `num_users` normalized Walsh-Hadamard codes of length `length`.
    pub fn walsh_hadamard(length: usize, num_users: usize) -> Result<Self> {
        if !(2..=Self::MAX_LENGTH).contains(&length) || !length.is_power_of_two() {
            return Err(invalid(format!(
                "spreading length {length} must be a power of two in 2..=1024"
            )));
        }
        if num_users == 0 || num_users > length {
            return Err(invalid(format!(
                "number of users {num_users} must be in 1..={length}"
            )));
        }
        let scale = 1.0 / (length as f64).sqrt();
        let mut entries = Vec::with_capacity(length * num_users);
        for user in 0..num_users {
            for chip in 0..length {
                let sign = if (chip & user).count_ones() % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                entries.push(sign * scale);
            }
        }
        Ok(Self {
            length,
            num_users,
            entries,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    /// Code of user `user`, `Lc` chips.
    pub fn code(&self, user: usize) -> &[f64] {
        &self.entries[user * self.length..(user + 1) * self.length]
    }

    pub fn entry(&self, chip: usize, user: usize) -> f64 {
        self.entries[user * self.length + chip]
    }

    /// Sum of all users' spread symbols, `C x`, through the fast transform.
    pub fn spread(&self, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut chips = vec![Complex64::new(0.0, 0.0); self.length];
        self.spread_into(symbols, &mut chips)?;
        Ok(chips)
    }

    pub fn spread_into(&self, symbols: &[Complex64], chips: &mut [Complex64]) -> Result<()> {
        if symbols.len() != self.num_users {
            return Err(invalid(format!(
                "expected {} symbols, got {}",
                self.num_users,
                symbols.len()
            )));
        }
        if chips.len() != self.length {
            return Err(invalid(format!(
                "expected {} chips, got {}",
                self.length,
                chips.len()
            )));
        }
        chips[..self.num_users].copy_from_slice(symbols);
        chips[self.num_users..].fill(Complex64::new(0.0, 0.0));
        fwht(chips);
        let scale = 1.0 / (self.length as f64).sqrt();
        chips.iter_mut().for_each(|c| *c *= scale);
        Ok(())
    }

    /// `c_j^T z` for one user.
    pub fn despread(&self, chips: &[Complex64], user: usize) -> Result<Complex64> {
        if user >= self.num_users {
            return Err(invalid(format!("user {user} out of range")));
        }
        despread(chips, self.code(user))
    }

    /// `C^T z` for all users at once. The Sylvester matrix is symmetric, so
    /// this is the same fast transform as spreading, truncated to `Nu`.
    pub fn despread_all(&self, chips: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        if chips.len() != self.length || out.len() != self.num_users {
            return Err(invalid(format!(
                "despread_all: {} chips into {} users, expected {} into {}",
                chips.len(),
                out.len(),
                self.length,
                self.num_users
            )));
        }
        let mut work = chips.to_vec();
        fwht(&mut work);
        let scale = 1.0 / (self.length as f64).sqrt();
        for (o, w) in out.iter_mut().zip(&work) {
            *o = w * scale;
        }
        Ok(())
    }
}

/// In-place unnormalized fast Walsh-Hadamard transform (Sylvester order).
///
/// # Panics
///
/// If the length is not a power of two.
pub fn fwht(data: &mut [Complex64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fwht length must be a power of two");
    let mut half = 1;
    while half < n {
        for start in (0..n).step_by(2 * half) {
            for i in start..start + half {
                let a = data[i];
                let b = data[i + half];
                data[i] = a + b;
                data[i + half] = a - b;
            }
        }
        half *= 2;
    }
}

/// Correlates received chips with one real code.
pub fn despread(chips: &[Complex64], code: &[f64]) -> Result<Complex64> {
    if chips.len() != code.len() {
        return Err(invalid(format!(
            "despread: {} chips vs code length {}",
            chips.len(),
            code.len()
        )));
    }
    Ok(chips.iter().zip(code).map(|(z, c)| z * c).sum())
}

/// Placement of a spread symbol's chips on the time-frequency grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MappingScheme {
    /// Adjacent subcarriers of one OFDM symbol.
    OneDa,
    /// Stride-interleaved subcarriers of one OFDM symbol.
    OneDb,
    /// `Sf x St` block of adjacent subcarriers and slots, snake in time.
    TwoDa,
    /// `Sf x St` block with stride-interleaved frequency coordinate.
    TwoDb,
}

impl MappingScheme {
    pub const ALL: [MappingScheme; 4] = [Self::OneDa, Self::OneDb, Self::TwoDa, Self::TwoDb];

    pub fn is_2d(self) -> bool {
        matches!(self, Self::TwoDa | Self::TwoDb)
    }

    pub fn is_interleaved(self) -> bool {
        matches!(self, Self::OneDb | Self::TwoDb)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::OneDa => "1Da",
            Self::OneDb => "1Db",
            Self::TwoDa => "2Da",
            Self::TwoDb => "2Db",
        }
    }
}

impl fmt::Display for MappingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MappingScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1Da" => Ok(Self::OneDa),
            "1Db" => Ok(Self::OneDb),
            "2Da" => Ok(Self::TwoDa),
            "2Db" => Ok(Self::TwoDb),
            other => Err(invalid(format!(
                "unknown chip mapping {other:?}, expected 1Da, 1Db, 2Da or 2Db"
            ))),
        }
    }
}

/// Chip placement table for one STBC layer of a frame.
///
/// The grid is `subcarriers x slots`, where a slot is one time position of
/// the layer (one Alamouti pair when STBC is used). Blocks are numbered in
/// row-major order over the grid: all frequency positions of the first time
/// row, then the next row. For 2D schemes the time axis is tiled with rows of
/// `St` slots; slots left over when `St` does not divide the slot count carry
/// 1D blocks of the same frequency flavour, so every cell is used exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChipMapping {
    scheme: MappingScheme,
    freq_spread: usize,
    time_spread: usize,
    subcarriers: usize,
    slots: usize,
    /// Grid cell `slot * subcarriers + subcarrier` per `(block, chip)`.
    cells: Vec<usize>,
}

impl ChipMapping {
    /// `time_spread` (`St`) is ignored for 1D schemes.
    pub fn new(
        scheme: MappingScheme,
        length: usize,
        time_spread: usize,
        subcarriers: usize,
        slots: usize,
    ) -> Result<Self> {
        if length == 0 || subcarriers == 0 || slots == 0 {
            return Err(invalid("chip mapping dimensions must be positive"));
        }
        let time_spread = if scheme.is_2d() { time_spread } else { 1 };
        if scheme.is_2d() && time_spread < 2 {
            return Err(invalid(format!(
                "{scheme} needs a time spreading length above 1"
            )));
        }
        if !length.is_multiple_of(time_spread) {
            return Err(invalid(format!(
                "time spreading length {time_spread} does not divide Lc={length}"
            )));
        }
        let freq_spread = length / time_spread;
        if freq_spread > subcarriers {
            return Err(invalid(format!(
                "Sf={freq_spread} exceeds {subcarriers} subcarriers"
            )));
        }
        if scheme.is_2d() && time_spread > slots {
            return Err(invalid(format!("St={time_spread} exceeds {slots} slots")));
        }
        if scheme.is_interleaved() && !subcarriers.is_multiple_of(freq_spread) {
            return Err(invalid(format!(
                "{scheme} needs Nc={subcarriers} divisible by Sf={freq_spread}"
            )));
        }
        let time_rows = slots / time_spread;
        let tail_slots = slots % time_spread;
        if tail_slots > 0 && length > subcarriers {
            return Err(invalid(format!(
                "{tail_slots} leftover slots cannot hold a {length}-chip block"
            )));
        }
        if tail_slots > 0 && scheme.is_interleaved() && !subcarriers.is_multiple_of(length) {
            return Err(invalid(format!(
                "{scheme} leftover slots need Nc={subcarriers} divisible by Lc={length}"
            )));
        }

        let mut cells = Vec::new();
        let freq_blocks = subcarriers / freq_spread;
        for row in 0..time_rows {
            for fb in 0..freq_blocks {
                for chip in 0..length {
                    let f = chip / time_spread;
                    let step = chip % time_spread;
                    let dt = if f % 2 == 0 {
                        step
                    } else {
                        time_spread - 1 - step
                    };
                    let sub = if scheme.is_interleaved() {
                        f * freq_blocks + fb
                    } else {
                        fb * freq_spread + f
                    };
                    cells.push((row * time_spread + dt) * subcarriers + sub);
                }
            }
        }
        let per_slot = subcarriers / length;
        for slot in time_rows * time_spread..slots {
            for fb in 0..per_slot {
                for chip in 0..length {
                    let sub = if scheme.is_interleaved() {
                        chip * per_slot + fb
                    } else {
                        fb * length + chip
                    };
                    cells.push(slot * subcarriers + sub);
                }
            }
        }
        Ok(Self {
            scheme,
            freq_spread,
            time_spread,
            subcarriers,
            slots,
            cells,
        })
    }

    pub fn scheme(&self) -> MappingScheme {
        self.scheme
    }

    pub fn freq_spread(&self) -> usize {
        self.freq_spread
    }

    pub fn time_spread(&self) -> usize {
        self.time_spread
    }

    pub fn length(&self) -> usize {
        self.freq_spread * self.time_spread
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// Number of Lc-chip blocks the layer holds.
    pub fn num_blocks(&self) -> usize {
        self.cells.len() / self.length()
    }

    /// `(subcarrier, slot)` of chip `chip` of block `block`.
    pub fn position(&self, block: usize, chip: usize) -> (usize, usize) {
        let cell = self.cells[block * self.length() + chip];
        (cell % self.subcarriers, cell / self.subcarriers)
    }

    /// Flat cell indices (`slot * subcarriers + subcarrier`) of one block.
    pub fn block_cells(&self, block: usize) -> &[usize] {
        let lc = self.length();
        &self.cells[block * lc..(block + 1) * lc]
    }

    /// Writes consecutive `Lc`-chip blocks into a `slots x subcarriers` cell
    /// buffer. Cells not covered by the given blocks are left untouched.
    pub fn map_into(&self, blocks: &[Complex64], cells: &mut [Complex64]) -> Result<()> {
        self.check_cells(cells.len())?;
        if !blocks.len().is_multiple_of(self.length()) || blocks.len() > self.cells.len() {
            return Err(invalid(format!(
                "{} chips do not form at most {} blocks of {}",
                blocks.len(),
                self.num_blocks(),
                self.length()
            )));
        }
        for (chip, &cell) in blocks.iter().zip(&self.cells) {
            cells[cell] = *chip;
        }
        Ok(())
    }

    /// Reads every block back out of a cell buffer, in block order.
    pub fn demap_from(&self, cells: &[Complex64], blocks: &mut [Complex64]) -> Result<()> {
        self.check_cells(cells.len())?;
        if blocks.len() != self.cells.len() {
            return Err(invalid(format!(
                "expected {} chips, got {}",
                self.cells.len(),
                blocks.len()
            )));
        }
        for (out, &cell) in blocks.iter_mut().zip(&self.cells) {
            *out = cells[cell];
        }
        Ok(())
    }

    fn check_cells(&self, len: usize) -> Result<()> {
        if len != self.subcarriers * self.slots {
            return Err(invalid(format!(
                "grid has {len} cells, mapping expects {}x{}",
                self.subcarriers, self.slots
            )));
        }
        Ok(())
    }
}

/// Places spread blocks on a single-antenna grid of the mapping's size.
pub fn map_chips(blocks: &[Complex64], mapping: &ChipMapping) -> Result<ResourceGrid> {
    let mut grid = ResourceGrid::new(1, mapping.subcarriers(), mapping.slots());
    mapping.map_into(blocks, grid.cells_mut())?;
    Ok(grid)
}

/// Inverse of [`map_chips`]; returns all blocks of the grid.
pub fn demap_chips(grid: &ResourceGrid, mapping: &ChipMapping) -> Result<Vec<Complex64>> {
    if grid.antennas() != 1
        || grid.subcarriers() != mapping.subcarriers()
        || grid.symbols() != mapping.slots()
    {
        return Err(invalid(format!(
            "grid {}x{}x{} does not match mapping {}x{}",
            grid.antennas(),
            grid.subcarriers(),
            grid.symbols(),
            mapping.subcarriers(),
            mapping.slots()
        )));
    }
    let mut blocks = vec![Complex64::new(0.0, 0.0); mapping.num_blocks() * mapping.length()];
    mapping.demap_from(grid.cells(), &mut blocks)?;
    Ok(blocks)
}

/// Per-antenna `subcarriers x symbols` complex grid.
///
/// Cells are stored symbol-major so every OFDM symbol is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    antennas: usize,
    subcarriers: usize,
    symbols: usize,
    cells: Vec<Complex64>,
}

impl ResourceGrid {
    pub fn new(antennas: usize, subcarriers: usize, symbols: usize) -> Self {
        Self {
            antennas,
            subcarriers,
            symbols,
            cells: vec![Complex64::new(0.0, 0.0); antennas * subcarriers * symbols],
        }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn cells(&self) -> &[Complex64] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [Complex64] {
        &mut self.cells
    }

    fn index(&self, antenna: usize, subcarrier: usize, symbol: usize) -> usize {
        (antenna * self.symbols + symbol) * self.subcarriers + subcarrier
    }

    pub fn get(&self, antenna: usize, subcarrier: usize, symbol: usize) -> Complex64 {
        self.cells[self.index(antenna, subcarrier, symbol)]
    }

    pub fn set(&mut self, antenna: usize, subcarrier: usize, symbol: usize, value: Complex64) {
        let i = self.index(antenna, subcarrier, symbol);
        self.cells[i] = value;
    }

    /// One OFDM symbol of one antenna.
    pub fn column(&self, antenna: usize, symbol: usize) -> &[Complex64] {
        let start = self.index(antenna, 0, symbol);
        &self.cells[start..start + self.subcarriers]
    }

    pub fn column_mut(&mut self, antenna: usize, symbol: usize) -> &mut [Complex64] {
        let start = self.index(antenna, 0, symbol);
        &mut self.cells[start..start + self.subcarriers]
    }

    /// All symbols of one antenna.
    pub fn antenna(&self, antenna: usize) -> &[Complex64] {
        let len = self.subcarriers * self.symbols;
        &self.cells[antenna * len..(antenna + 1) * len]
    }

    pub fn antenna_mut(&mut self, antenna: usize) -> &mut [Complex64] {
        let len = self.subcarriers * self.symbols;
        &mut self.cells[antenna * len..(antenna + 1) * len]
    }

    /// Mean `|cell|^2` over one antenna.
    pub fn mean_energy(&self, antenna: usize) -> f64 {
        let cells = self.antenna(antenna);
        cells.iter().map(|c| c.norm_sqr()).sum::<f64>() / cells.len() as f64
    }
}
