import json

import pytest

from cellgauge.errors import FormatError
from cellgauge.refs import CellRef
from cellgauge.workbook import (
    find_dangling_references,
    load_csv_grid,
    load_workbook,
    load_workbook_doc,
    reference_delta,
    resolve_references,
)
from cellgauge.formula import CellRefNode, RangeRefNode, walk

from conftest import make_workbook


def test_csv_two_cell_grid():
    wb = load_csv_grid("3,=A1*2\n")
    a1 = wb.cell("Sheet1!A1")
    b1 = wb.cell("Sheet1!B1")
    assert a1.value == 3.0 and not a1.is_formula
    assert b1.is_formula and b1.ast.source == "=A1*2"


def test_csv_typing_and_quoting():
    wb = load_csv_grid('TRUE,false,hello,"=SUM(A1,B1)",1.5\n,still here\n')
    assert wb.cell("Sheet1!A1").value is True
    assert wb.cell("Sheet1!B1").value is False
    assert wb.cell("Sheet1!C1").value == "hello"
    assert wb.cell("Sheet1!D1").is_formula
    assert wb.cell("Sheet1!E1").value == 1.5
    assert wb.cell("Sheet1!A2") is None  # empty cells are skipped
    assert wb.cell("Sheet1!B2").value == "still here"


def test_doc_cross_sheet():
    wb = make_workbook({
        "In": {"A1": 1},
        "Out": {"A1": "=In!A1+1"},
    })
    refs = resolve_references(wb)
    assert len(refs) == 1
    assert refs[0].to_cell == CellRef("In", 1, 1)
    assert refs[0].from_cell == CellRef("Out", 1, 1)


def test_bad_formula_degrades_to_string_with_warning():
    wb = make_workbook({"S": {"A1": "=SUM("}})
    assert wb.warnings and wb.warnings[0].code == "W001"
    assert wb.warnings[0].address == "S!A1"
    cell = wb.cell("S!A1")
    assert not cell.is_formula and cell.value == "=SUM("


@pytest.mark.parametrize("doc", [
    {"sheets": [{"name": "S", "cells": []}], "extra": 1},
    {"sheets": [{"name": "S", "cells": [], "bogus": 1}]},
    {"sheets": [{"name": "S", "cells": [{"ref": "A1"}]}]},
    {"sheets": [{"name": "S", "cells": [{"ref": "A1", "value": 1, "formula": "=1"}]}]},
    {"sheets": [{"name": "S", "cells": [{"ref": "A1", "value": 1, "note": "x"}]}]},
    {"sheets": [{"name": "S", "cells": [{"ref": "Other!A1", "value": 1}]}]},
    {"sheets": [{"name": "S", "cells": [{"ref": "??", "value": 1}]}]},
    {"sheets": [{"name": "S", "cells": [{"ref": "A1", "value": None}]}]},
    {"sheets": [{"name": "S", "cells": [{"ref": "A1", "value": 1}, {"ref": "A1", "value": 2}]}]},
    {"sheets": [{"name": "S", "cells": []}, {"name": "s", "cells": []}]},
    {"sheets": [{"name": "", "cells": []}]},
    {"sheets": {}},
    [],
])
def test_doc_strictness(doc):
    with pytest.raises(FormatError):
        load_workbook_doc(doc)


def test_load_by_extension(tmp_path):
    doc = {"sheets": [{"name": "S", "cells": [{"ref": "A1", "value": 7}]}]}
    p = tmp_path / "wb.json"
    p.write_text(json.dumps(doc))
    wb = load_workbook(p)
    assert wb.cell("S!A1").value == 7.0
    c = tmp_path / "grid.csv"
    c.write_text("1,2\n")
    assert load_workbook(c).cell("Sheet1!B1").value == 2.0
    with pytest.raises(FormatError):
        load_workbook(tmp_path / "wb.xlsx")


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_workbook(tmp_path / "nope.json")


def test_invalid_json_is_format_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        load_workbook(p)


# --- resolution ---------------------------------------------------------------


def test_duplicate_references_kept():
    wb = make_workbook({"S": {"A1": 1, "B1": "=A1+A1"}})
    refs = resolve_references(wb)
    assert len(refs) == 2
    assert all(r.to_cell == CellRef("S", 1, 1) for r in refs)


def test_range_expansion():
    wb = make_workbook({"S": {"B1": "=SUM(A1:A3)"}})
    refs = resolve_references(wb)
    assert [r.to_cell.render(include_sheet=False) for r in refs] == ["A1", "A2", "A3"]
    assert all(r.via_range for r in refs)


def test_empty_workbook_resolves_empty():
    wb = make_workbook({"S": {}})
    assert resolve_references(wb) == []


def test_ref_styles():
    wb = make_workbook({"S": {
        "B1": "=$A$1", "B2": "=A1", "B3": "=$A1", "B4": "=SUM($A$1:$A$2)",
    }})
    styles = {r.from_cell.render(include_sheet=False): r.ref_style
              for r in resolve_references(wb)}
    assert styles["B1"] == "absolute"
    assert styles["B2"] == "relative"
    assert styles["B3"] == "mixed"
    assert styles["B4"] == "absolute"


def test_dangling_reference_detected():
    wb = make_workbook({"S": {"A1": "=Missing!B2+1"}})
    assert resolve_references(wb) == []
    dangling = find_dangling_references(wb)
    assert len(dangling) == 1
    assert dangling[0].missing_sheet == "Missing"


def test_sheet_names_match_case_insensitively():
    wb = make_workbook({"Data": {"A1": 5}, "Out": {"A1": "=data!A1"}})
    refs = resolve_references(wb)
    assert refs[0].to_cell.sheet == "Data"  # canonical case restored


def test_reference_conservation():
    wb = make_workbook({"S": {
        "C1": "=A1+SUM(B1:B4)+A1*MAX(A1:B2,7)",
    }})
    refs = resolve_references(wb)
    cell = wb.cell("S!C1")
    singles = sum(isinstance(n, CellRefNode) for n in walk(cell.ast.root))
    area = sum(
        n.ref.width * n.ref.height
        for n in walk(cell.ast.root) if isinstance(n, RangeRefNode)
    )
    assert len(refs) == singles + area == 2 + 4 + 4


# --- deltas --------------------------------------------------------------------


def delta_of(formula, at="C3"):
    wb = make_workbook({"S": {at: formula}})
    return reference_delta(resolve_references(wb)[0])


def test_reference_delta_examples():
    assert delta_of("=A1") == (-2, -2)
    assert delta_of("=C10") == (0, 7)


def test_reference_delta_cross_sheet_marker():
    wb = make_workbook({"In": {"A1": 1}, "Out": {"A1": "=In!A1"}})
    assert reference_delta(resolve_references(wb)[0]) is None


def test_delta_antisymmetry():
    wb = make_workbook({"S": {"C3": "=A1", "A1": "=C3"}})
    refs = resolve_references(wb)
    d1 = reference_delta(refs[0])
    d2 = reference_delta(refs[1])
    assert d1 == (-d2[0], -d2[1])


def test_loading_deterministic():
    doc = {"sheets": [
        {"name": "B", "cells": [{"ref": "A2", "value": 2}, {"ref": "A1", "value": 1}]},
        {"name": "A", "cells": [{"ref": "Z9", "formula": "=B!A1"}]},
    ]}
    wb1 = load_workbook_doc(doc)
    wb2 = load_workbook_doc(doc)
    assert [s.name for s in wb1.sheets] == [s.name for s in wb2.sheets]
    assert [c.address for c in wb1.iter_cells()] == [c.address for c in wb2.iter_cells()]
    assert resolve_references(wb1) == resolve_references(wb2)
