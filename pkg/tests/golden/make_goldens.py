"""One-time authoring script for the golden ingestion corpus.

Each case is an HTML source plus a hand-derived expectation (segment texts,
marks, positions, warnings). The script writes both files and then checks
the expectation against the live parser, printing any disagreement. The
expectations were written first, from the documented ingestion rules; the
parser run is verification, not the source of truth.
"""

import json
import sys
from pathlib import Path

HERE = Path(__file__).parent

MARKS = ("font", "strong", "color", "blockquote", "supertalk", "header")


def m(*names):
    for n in names:
        assert n in MARKS, n
    return {mark: int(mark in names) for mark in MARKS}


def seg(text, para, pos, *marks):
    return {"text": text, "marks": m(*marks), "para": para, "seg": pos}


CASES = {
    # plain sentences; the second paragraph checks ';' does not split
    "case01": (
        "<p>你好。世界！</p><p>前半;后半。</p>",
        [
            seg("你好。", 0, 0),
            seg("世界！", 0, 1),
            seg("前半;后半。", 1, 2),
        ],
        [],
    ),
    # strong covering exactly one segment
    "case02": (
        "<p><strong>重点。</strong>后续。</p>",
        [
            seg("重点。", 0, 0, "strong"),
            seg("后续。", 0, 1),
        ],
        [],
    ),
    # segment spanning an inline boundary ORs the marks
    "case03": (
        "<p><b>加粗</b>继续说。</p>",
        [seg("加粗继续说。", 0, 0, "strong")],
        [],
    ),
    # every header level marks the same flag; one paragraph each
    "case04": (
        "<h1>大标题。</h1><h3>小标题。</h3><p>正文。</p>",
        [
            seg("大标题。", 0, 0, "header"),
            seg("小标题。", 1, 1, "header"),
            seg("正文。", 2, 2),
        ],
        [],
    ),
    "case05": (
        "<blockquote>引用的话。</blockquote><p>评论。</p>",
        [
            seg("引用的话。", 0, 0, "blockquote"),
            seg("评论。", 1, 1),
        ],
        [],
    ),
    # font via tag and via font-size style
    "case06": (
        '<p><font>字体。</font><span style="font-size: 18px">大字。</span>普通。</p>',
        [
            seg("字体。", 0, 0, "font"),
            seg("大字。", 0, 1, "font"),
            seg("普通。", 0, 2),
        ],
        [],
    ),
    # color via style and via attribute; the font tag adds its own mark
    "case07": (
        '<p><span style="color: red">红字。</span><font color="#ff0000">也红。</font>无色。</p>',
        [
            seg("红字。", 0, 0, "color"),
            seg("也红。", 0, 1, "font", "color"),
            seg("无色。", 0, 2),
        ],
        [],
    ),
    # supertalk via class substring and via tag name
    "case08": (
        '<p><span class="supertalk-tag">话题。</span><supertalk>标签。</supertalk>平常。</p>',
        [
            seg("话题。", 0, 0, "supertalk"),
            seg("标签。", 0, 1, "supertalk"),
            seg("平常。", 0, 2),
        ],
        [],
    ),
    # both br forms split; trailing unterminated text still emits
    "case09": (
        "<p>第一行<br>第二行。<br/>尾巴</p>",
        [
            seg("第一行", 0, 0),
            seg("第二行。", 0, 1),
            seg("尾巴", 0, 2),
        ],
        [],
    ),
    # a maximal splitter run stays inside one segment
    "case10": (
        "<p>真的吗！？！正常。</p>",
        [
            seg("真的吗！？！", 0, 0),
            seg("正常。", 0, 1),
        ],
        [],
    ),
    # wrapper divs with no direct text are transparent
    "case11": (
        "<div><div><p>深层内容。</p></div></div>",
        [seg("深层内容。", 0, 0)],
        [],
    ),
    # a div that holds text directly becomes paragraphs around the inner p
    "case12": (
        "<div>直接文本。<p>段落文本。</p>尾部文本。</div>",
        [
            seg("直接文本。", 0, 0),
            seg("段落文本。", 1, 1),
            seg("尾部文本。", 2, 2),
        ],
        [],
    ),
    # entity decoding and whitespace collapsing (&nbsp; is whitespace)
    "case13": (
        "<p>  a   b&nbsp;c。   </p><p>&amp;符号！</p>",
        [
            seg("a b c。", 0, 0),
            seg("&符号！", 1, 1),
        ],
        [],
    ),
    # mis-nested inline tags: auto-close with warnings, marks still OR
    "case14": (
        "<p><b>粗<i>斜体。</b></i>尾声。</p>",
        [
            seg("粗斜体。", 0, 0, "strong"),
            seg("尾声。", 0, 1),
        ],
        [
            "auto-closed <i> at </b>",
            "ignored end tag </i> with no open element",
        ],
    ),
    # tags left open at end of input
    "case15": (
        "<p><strong>没关完。",
        [seg("没关完。", 0, 0, "strong")],
        ["malformed markup: auto-closed unclosed tags <p>, <strong>"],
    ),
    # numeric and keyword font weights; 400 is not bold
    "case16": (
        '<p><span style="font-weight: 700">数字粗。</span>'
        '<span style="font-weight: 400">正常粗。</span>'
        '<span style="FONT-WEIGHT: BOLDER">更粗。</span></p>',
        [
            seg("数字粗。", 0, 0, "strong"),
            seg("正常粗。", 0, 1),
            seg("更粗。", 0, 2, "strong"),
        ],
        [],
    ),
    # whitespace-only and break-only blocks do not consume paragraph slots
    "case17": (
        "<p>   </p><p>第一。</p><div><br></div><p>第二。</p>",
        [
            seg("第一。", 0, 0),
            seg("第二。", 1, 1),
        ],
        [],
    ),
    # a realistic article with inter-tag newlines
    "case18": (
        "<div>\n<h2>春季徒步指南。</h2>\n"
        "<p>这条线路<strong>强烈推荐</strong>！风景很好。</p>\n"
        "<blockquote>网友说：值得一去。</blockquote>\n"
        '<p>最后，<span style="color:#336699">注意安全</span>。</p>\n</div>',
        [
            seg("春季徒步指南。", 0, 0, "header"),
            seg("这条线路强烈推荐！", 1, 1, "strong"),
            seg("风景很好。", 1, 2),
            seg("网友说：值得一去。", 2, 3, "blockquote"),
            seg("最后，注意安全。", 3, 4, "color"),
        ],
        [],
    ),
    # a styled headline div carrying three marks at once
    "case19": (
        '<div style="font-size:16px; font-weight:bold; color:rgb(34,34,34)">醒目标题。</div>'
        "<div>正文内容。</div>",
        [
            seg("醒目标题。", 0, 0, "font", "strong", "color"),
            seg("正文内容。", 1, 1),
        ],
        [],
    ),
    # anchors pass through (color attribute still counts); list tags are
    # transparent so the items join the enclosing text flow
    "case20": (
        '<p>点击<a href="https://example.com" color="blue">这里</a>查看更多。</p>'
        "<ul><li>项目一。</li><li>项目二。</li></ul>",
        [
            seg("点击这里查看更多。", 0, 0, "color"),
            seg("项目一。", 1, 1),
            seg("项目二。", 1, 2),
        ],
        [],
    ),
}


def main() -> int:
    sys.path.insert(0, str(HERE.parents[2] / "src"))
    from argmine.documents import document_to_json
    from argmine.ingest import parse_html

    failures = 0
    for name, (html, segments, warnings) in CASES.items():
        (HERE / f"{name}.html").write_text(html, encoding="utf-8")
        expected = {
            "document": {"doc_id": name, "segments": segments},
            "warnings": warnings,
        }
        (HERE / f"{name}.json").write_text(
            json.dumps(expected, ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
        )
        doc = parse_html(html, doc_id=name)
        actual = {"document": document_to_json(doc), "warnings": list(doc.warnings)}
        if actual != expected:
            failures += 1
            print(f"== {name} MISMATCH ==")
            print(" expected:", json.dumps(expected, ensure_ascii=False))
            print(" actual:  ", json.dumps(actual, ensure_ascii=False))
    print(f"{len(CASES)} cases written, {failures} disagree with the parser")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
