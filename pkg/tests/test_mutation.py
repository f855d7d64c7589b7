import io
import json
from importlib import resources

import pytest

from isadiff.asl import DecodeTag, Polarity, eval_decode
from isadiff.asl.symbolic import AuxSymbol
from isadiff.errors import MappingError
from isadiff.mutation import (
    InstructionStream, MutationSet, Origin, build_mutation_sets, cartesian_generate,
    emit_streams, generate, init_mutation_set, read_streams, streams_to_text,
)
from isadiff.solver import Witness
from isadiff.spec_ingest import Field, infer_symbol_type


def fld(name, hi, lo, constant=None):
    w = hi - lo + 1
    return Field(hi, lo, None if constant else name, constant,
                 None if constant else infer_symbol_type(name, w))


def pinned_overrides():
    text = resources.files("isadiff.data").joinpath("vld4_pinned_init.json").read_text()
    return json.loads(text)["VLD4-A32"]


def test_constant_field():
    ms = init_mutation_set(fld(None, 31, 23, "111101000"), 42)
    assert ms.bit_strings() == ["111101000"]
    assert ms.origins == [Origin.CONSTANT]


def test_one_bit_other():
    assert init_mutation_set(fld("D", 22, 22), 42).values == [0, 1]


def test_immediate_rule():
    ms = init_mutation_set(fld("imm8", 7, 0), 42, "X")
    assert len(ms) == 8
    assert ms.values[:2] == [255, 0]
    assert len(set(ms.values)) == 8


def test_condition_rule():
    assert init_mutation_set(fld("cond", 31, 28), 42).bit_strings() == ["1110"]


def test_register_rule():
    ms = init_mutation_set(fld("Rn", 19, 16), 42, "X")
    assert len(ms) == 4
    assert ms.values[:3] == [0, 1, 15]
    assert ms.values[3] not in (11, 13)


def test_three_bit_register_caps_at_seven():
    ms = init_mutation_set(fld("Rd", 2, 0), 42, "X")
    assert ms.values[:3] == [0, 1, 7]


def test_other_n_bits():
    ms = init_mutation_set(fld("size", 7, 6), 42, "X")
    assert len(ms) == 2 and len(set(ms.values)) == 2


def test_one_bit_immediate_degenerates():
    assert sorted(init_mutation_set(fld("imm1", 0, 0), 42, "X").values) == [0, 1]


def test_init_is_seeded():
    a = init_mutation_set(fld("imm12", 11, 0), 7, "E").values
    b = init_mutation_set(fld("imm12", 11, 0), 7, "E").values
    c = init_mutation_set(fld("imm12", 11, 0), 8, "E").values
    assert a == b and a != c


def test_add_rejects_out_of_range():
    ms = MutationSet(fld("D", 0, 0))
    with pytest.raises(ValueError):
        ms.add(2, Origin.INIT)


def test_vld4_pinned_sizes(vld4):
    res = generate(vld4, rng_seed=42, init_overrides=pinned_overrides())
    assert [len(ms) for ms in res.sets] == [1, 2, 1, 4, 6, 2, 4, 3, 5]
    assert len(res.streams) == 5760
    size = next(ms for ms in res.sets if ms.field.name == "size")
    assert set(size.bit_strings()) >= {"00", "11"}


def test_present_witness_leaves_set_unchanged(vld4):
    base = build_mutation_sets(vld4, [], 42, pinned_overrides())
    again = build_mutation_sets(vld4, [Witness({"D": 1, "Rn": 0}, Polarity.ASSERT)], 42, pinned_overrides())
    assert [ms.values for ms in base] == [ms.values for ms in again]


def test_aux_witness_maps_to_case_pattern(vld4):
    inc = AuxSymbol("inc", 2, ((1, "type", 0), (2, "type", 1)))
    sets = build_mutation_sets(vld4, [Witness({"inc": 2}, Polarity.ASSERT, (inc,))], 42,
                               {"type": ["0000"]})
    t = next(ms for ms in sets if ms.field.name == "type")
    assert t.bit_strings() == ["0000", "0001"]
    assert t.origins == [Origin.INIT, Origin.SOLVED]


def test_aux_witness_without_arm(vld4):
    inc = AuxSymbol("inc", 2, ((1, "type", 0),))
    with pytest.raises(MappingError):
        build_mutation_sets(vld4, [Witness({"inc": 3}, Polarity.ASSERT, (inc,))], 42)


def test_unknown_override_field(vld4):
    with pytest.raises(KeyError):
        build_mutation_sets(vld4, [], 42, {"nope": [0]})


def test_all_constant_encoding_single_stream(specs):
    res = generate(specs["WFI-T16"])
    assert len(res.streams) == 1
    assert res.streams[0].word == 0xBF30


def test_motivating_stream_generated_when_values_present(str_t32):
    res = generate(str_t32, init_overrides={"Rn": [15], "Rt": [0], "P": [1], "U": [0], "W": [1], "imm8": [0xDD]})
    hits = [s for s in res.streams if s.word == 0xF84F0DDD]
    assert len(hits) == 1 and hits[0].decode_tag is DecodeTag.UNDEFINED


def test_product_row_major(vld4):
    sets = build_mutation_sets(vld4, [], 42, pinned_overrides())
    streams = cartesian_generate(sets, vld4)
    assert streams[0].assignment["Rm"] == sets[-1].values[0]
    assert streams[1].assignment["Rm"] == sets[-1].values[1]
    assert streams[0].assignment["D"] == streams[1].assignment["D"]


def test_tags_reproducible(vld4):
    for s in generate(vld4).streams[::97]:
        assert eval_decode(vld4.decode_ast, s.assignment).tag is s.decode_tag


def test_stream_bytes():
    t32 = InstructionStream("X", "T32", 32, 0xF84F0DDD, {}, DecodeTag.OK)
    a32 = InstructionStream("X", "A32", 32, 0xE6100000, {}, DecodeTag.OK)
    t16 = InstructionStream("X", "T16", 16, 0xBF30, {}, DecodeTag.OK)
    assert t32.to_bytes() == bytes([0x4F, 0xF8, 0xDD, 0x0D])
    assert a32.to_bytes() == bytes([0x00, 0x00, 0x10, 0xE6])
    assert t16.to_bytes() == bytes([0x30, 0xBF])
    assert t16.hex == "bf30"


def test_emit_count_and_round_trip(vld4):
    streams = generate(vld4, init_overrides=pinned_overrides()).streams
    buf = io.StringIO()
    assert emit_streams(streams, buf, {"seed": 42}) == 5760
    text = buf.getvalue()
    assert text.count("\n") == 5761
    assert read_streams(io.StringIO(text)) == streams


def test_emit_empty():
    buf = io.StringIO()
    assert emit_streams([], buf) == 0
    assert buf.getvalue() == ""


def test_record_format():
    s = InstructionStream("STR-imm-T32", "T32", 32, 0xF84F0DDD, {"Rn": 15, "Rt": 0}, DecodeTag.UNDEFINED)
    assert streams_to_text([s]) == "STR-imm-T32\tT32\tf84f0ddd\tUndefined\tRn=15;Rt=0\n"
