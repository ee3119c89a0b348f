import random

from ciphercast.bench import (
    BenchTable,
    run_storage_report,
    run_tf_bench,
    run_xray_bench,
    to_csv,
    to_markdown,
)

# the storage table shape: 4 encodings x (plain + 6 key sizes), sizes in
# decimal megabytes for a 100^3 volume
STORAGE_EXPECTED = {
    "scalar": [1, 16, 32, 64, 128, 256, 512],
    "2dim": [2, 32, 64, 128, 256, 512, 1024],
    "3dim": [3, 48, 96, 192, 384, 768, 1536],
    "4dim": [4, 64, 128, 256, 512, 1024, 2048],
}


class TestStorageReport:
    def test_all_28_cells(self):
        table = run_storage_report(verify=False)
        assert len(table.row_labels) * len(table.col_labels) == 28
        for row, expected in STORAGE_EXPECTED.items():
            for col, value in zip(table.col_labels, expected):
                assert table.cell(row, col) == value, (row, col)

    def test_serializer_verification(self):
        table = run_storage_report(verify=True, rng=random.Random(70))
        check = table.meta["verify"]
        assert check["formula_bytes"] == 16**3 * 2 * 64 // 8
        assert check["file_bytes"] == check["header_bytes"] + check["formula_bytes"] + check["sidecar_bytes"]


class TestXrayBench:
    def test_structure_and_positive_cells(self):
        table = run_xray_bench(
            size=16,
            bits_list=(64,),
            image_size=8,
            gamma=3,
            rng=random.Random(71),
        )
        assert table.meta["workers"] == 1
        for sampling in ("nn", "trilinear"):
            for obf in ("no-obf", "obf"):
                for stage in ("encrypt", "render", "decrypt"):
                    assert table.cell(f"{sampling}/{obf}/{stage}", "64bit") > 0
        assert table.cell("nn/obf/render", "plain") > 0

    def test_formatters(self):
        table = BenchTable(
            title="demo",
            row_labels=["a", "b"],
            col_labels=["x", "y"],
            cells={("a", "x"): 1.0, ("a", "y"): 0.5, ("b", "x"): None, ("b", "y"): 2.25},
        )
        csv_text = to_csv(table)
        assert csv_text.splitlines()[0] == ",x,y"
        assert "a,1,0.5000" in csv_text
        md_text = to_markdown(table)
        assert md_text.splitlines()[0] == "| demo | x | y |"
        assert "| b |  | 2.2500 |" in md_text


class TestTfBench:
    def test_structure(self):
        table = run_tf_bench(
            dims_list=(2,),
            node_counts=(1, 2),
            bits_list=(128,),
            size=16,
            image_size=8,
            gamma=3,
            rng=random.Random(72),
        )
        assert table.cell("2dim/encrypt", "128bit") > 0
        for count in (1, 2):
            assert table.cell(f"2dim/{count}color/render", "128bit") > 0
            assert table.cell(f"2dim/{count}color/decrypt", "128bit") > 0
            assert table.cell(f"2dim/{count}color/render", "plain") > 0
