import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { parsePsv, serializePsv } from "../src/xml";
import type { ProtocolModel } from "../src/model";

const dhke = readFileSync("tests/fixtures/dhke.psv.xml", "utf-8");
const nsp = readFileSync("tests/fixtures/nsp.psv.xml", "utf-8");

describe("PSV loading", () => {
  it("reads the DHKE fixture into the expected model", () => {
    const model = parsePsv(dhke);
    expect(model.name).toBe("dhke");
    expect(model.bundles).toEqual(["diffie-hellman"]);
    expect(model.roles.map((r) => r.name)).toEqual(["A", "B"]);
    expect(model.roles[0].fresh).toEqual(["x"]);
    expect(model.messages).toHaveLength(2);
    expect(model.messages[0]).toMatchObject({ from: "A", to: "B", delivery: "decompose" });
    expect(model.messages[0].payload).toEqual({
      kind: "apply",
      fun: "exp",
      args: [
        { kind: "const", name: "g", sort: "pub" },
        { kind: "var", name: "x", sort: "fresh" },
      ],
    });
  });

  it("reads goals and long-term keys from the NSP fixture", () => {
    const model = parsePsv(nsp);
    expect(model.roles[0].ltks).toEqual([{ name: "skA", kind: "asymmetric" }]);
    expect(model.goals).toEqual([
      { kind: "secrecy", role: "A", term: { kind: "var", name: "na", sort: "fresh" } },
      { kind: "secrecy", role: "B", term: { kind: "var", name: "nb", sort: "fresh" } },
    ]);
  });

  it("rejects malformed XML", () => {
    expect(() => parsePsv("<protocol")).toThrow();
  });
});

describe("canonical serialization", () => {
  it("round-trips the fixtures byte for byte", () => {
    for (const raw of [dhke, nsp]) {
      expect(serializePsv(parsePsv(raw))).toBe(raw);
    }
  });

  it("is stable under repeated parse/serialize", () => {
    const once = serializePsv(parsePsv(dhke));
    expect(serializePsv(parsePsv(once))).toBe(once);
  });

  it("canonicalizes attribute order, defaults and indentation", () => {
    const sloppy =
      '<?xml version="1.0"?><protocol name="minimal" format="1">' +
      '<roles><role name="A"/></roles></protocol>';
    const expected =
      '<?xml version="1.0" encoding="UTF-8"?>\n' +
      '<protocol format="1" name="minimal">\n' +
      "  <roles>\n" +
      '    <role name="A"/>\n' +
      "  </roles>\n" +
      "</protocol>\n";
    expect(serializePsv(parsePsv(sloppy))).toBe(expected);
  });

  it("omits default sorts and delivery but keeps explicit ones", () => {
    const model: ProtocolModel = parsePsv(dhke);
    model.messages[1].delivery = "atomic";
    const text = serializePsv(model);
    expect(text).toContain('<message delivery="atomic" from="B" index="2" to="A">');
    expect(text).toContain('<var name="x" sort="fresh"/>');
    expect(text).toContain('<const name="g"/>');
  });
});
