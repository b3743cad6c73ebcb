import textwrap

import pytest

from slp.corpus import EntityMention, load_corpus

# Fig-2-style sentence: residence relation, collapsed prepositions.
SHERMAN_CONLL = """\
# doc_id = fig2
# sent_id = 1
1\tSherman\tsherman\tNNP\tPERSON\t5\tnsubj
2\t,\t,\t,\tNONE\t1\tpunct
3\t63\t63\tCD\tNUMBER\t1\tamod
4\t,\t,\t,\tNONE\t1\tpunct
5\tgrew\tgrow\tVBD\tNONE\t0\troot
6\tup\tup\tRP\tNONE\t5\tprt
7\tin\tin\tIN\tNONE\t10\tcase
8\ta\ta\tDT\tNONE\t10\tdet
9\tmiddle-class\tmiddle-class\tJJ\tNONE\t10\tnn
10\tneighborhood\tneighborhood\tNN\tNONE\t5\tprep_in
11\tof\tof\tIN\tNONE\t12\tcase
12\tGreenwich\tgreenwich\tNNP\tLOCATION-CITY\t10\tprep_of
13\t.\t.\t.\tNONE\t5\tpunct
"""

# Apposition sentence: the officer phrase heads the subject clause.
RAY_YOUNG_CONLL = """\
# doc_id = table1
# sent_id = 1
1\tRay\tray\tNNP\tPERSON\t2\tnn
2\tYoung\tyoung\tNNP\tPERSON\t7\tappos
3\t,\t,\t,\tNONE\t2\tpunct
4\tthe\tthe\tDT\tNONE\t7\tdet
5\tchief\tchief\tJJ\tNONE\t7\tamod
6\tfinancial\tfinancial\tJJ\tNONE\t7\tamod
7\tofficer\tofficer\tNN\tNONE\t12\tnsubj
8\tof\tof\tIN\tNONE\t10\tcase
9\tGeneral\tgeneral\tNNP\tORGANIZATION\t10\tnn
10\tMotors\tmotors\tNNP\tORGANIZATION\t7\tprep_of
11\t,\t,\t,\tNONE\t7\tpunct
12\tsaid\tsay\tVBD\tNONE\t0\troot
13\tGM\tgm\tNNP\tORGANIZATION\t16\tnsubj
14\tcould\tcould\tMD\tNONE\t16\taux
15\tnot\tnot\tRB\tNONE\t16\tneg
16\tbail\tbail\tVB\tNONE\t12\tccomp
17\tout\tout\tRP\tNONE\t16\tprt
18\tDelphi\tdelphi\tNNP\tORGANIZATION\t16\tdobj
19\t.\t.\t.\tNONE\t12\tpunct
"""


@pytest.fixture
def sherman_sentence(tmp_path):
    path = tmp_path / "sherman.conllu"
    path.write_text(SHERMAN_CONLL, encoding="utf-8")
    return load_corpus(path)[0]


@pytest.fixture
def ray_young_sentence(tmp_path):
    path = tmp_path / "ray_young.conllu"
    path.write_text(RAY_YOUNG_CONLL, encoding="utf-8")
    return load_corpus(path)[0]


def mention(sentence, first, last, head, entity_type, kb_id=None):
    return EntityMention(
        doc_id=sentence.doc_id,
        sentence_id=sentence.sentence_id,
        first=first,
        last=last,
        head_token=head,
        entity_type=entity_type,
        surface=" ".join(t.surface for t in sentence.tokens[first - 1 : last]),
        kb_id=kb_id,
    )


@pytest.fixture
def sherman_mentions(sherman_sentence):
    return (
        mention(sherman_sentence, 1, 1, 1, "PERSON", "E1"),
        mention(sherman_sentence, 12, 12, 12, "LOCATION-CITY", "E2"),
    )


@pytest.fixture
def ray_young_mentions(ray_young_sentence):
    return (
        mention(ray_young_sentence, 1, 2, 2, "PERSON", "E3"),
        mention(ray_young_sentence, 9, 10, 10, "ORGANIZATION", "E4"),
    )


def write_kb(tmp_path, facts, aliases, schema):
    facts_path = tmp_path / "facts.tsv"
    aliases_path = tmp_path / "aliases.tsv"
    schema_path = tmp_path / "schema.tsv"
    facts_path.write_text("".join(f"{r}\t{s}\t{o}\n" for r, s, o in facts), encoding="utf-8")
    aliases_path.write_text("".join(f"{k}\t{a}\n" for k, a in aliases), encoding="utf-8")
    schema_path.write_text("".join(f"{r}\t{s}\t{o}\n" for r, s, o in schema), encoding="utf-8")
    return facts_path, aliases_path, schema_path
