mod common;

use carrytail::formats::{panel_records, read_price_csv, write_price_csv};
use carrytail_core::ingestion::PricePanel;

// Set CARRYTAIL_WRITE_FIXTURES=1 to rewrite the files from the generator.
#[test]
fn fixture_matches_generator() {
    let panel = common::fixture_panel();
    let dir = common::fixtures();
    let spot = dir.join("spot.csv");
    let forward = dir.join("forward.csv");
    if std::env::var_os("CARRYTAIL_WRITE_FIXTURES").is_some() {
        write_price_csv(&spot, &panel_records(&panel, false)).unwrap();
        write_price_csv(&forward, &panel_records(&panel, true)).unwrap();
    }
    let back = PricePanel::from_records(&read_price_csv(&spot).unwrap(), &read_price_csv(&forward).unwrap()).unwrap();
    assert_eq!(back, panel);
}
