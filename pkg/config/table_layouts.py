import math
from typing import Dict, List, Optional, Tuple

Row = Tuple[str, ...]


class TableLayouts:
    """Row/column structure and published values of the reproduction tables"""

    CDS_ORDERS = (1, 2, 5, 10, 20, 30)
    TRANCHE_LABELS = ('0-0.15', '0.15-0.3', '0.3-1')
    CONTAGION_LEVELS = (0.0, 0.3, 3.0)
    FACTOR_LOADINGS = (0.0, 0.5, 0.9)
    DECAY_RATES = (0.0, 1.0, 10.0, 100.0, math.inf)
    COPULA_TAGS = ('ProdC', 'ExpC', 'GausC')
    COUNTERPARTY_TAGS = ('GausC', 'GausCCR')

    # The decay table fixes the Gaussian loading and the contagion level
    DECAY_TABLE_RHO = 0.5
    DECAY_TABLE_CONTAGION = 3.0

    TITLES = {
        1: 'CDO rates, Gaussian copula contagion mixture',
        2: 'Basket CDS and CDO rates, product / exponential / Gaussian copula',
        3: 'Basket CDS and CDO rates with exponential decay, Gaussian copula rho=0.5, c=3',
        4: 'CDO rates with and without counterparty risk, Gaussian copula',
    }

    # Published rates, one list per row in column order
    _TABLE_1 = {
        ('0.0', '0-0.15'): [0.0740, 0.0890, 0.2360],
        ('0.0', '0.15-0.3'): [0.0000, 0.0003, 0.1052],
        ('0.0', '0.3-1'): [0.0000, 0.0000, 0.0199],
        ('0.5', '0-0.15'): [0.0682, 0.0843, 0.1553],
        ('0.5', '0.15-0.3'): [0.0042, 0.0164, 0.1020],
        ('0.5', '0.3-1'): [0.0001, 0.0022, 0.0596],
        ('0.9', '0-0.15'): [0.0326, 0.0373, 0.0488],
        ('0.9', '0.15-0.3'): [0.0147, 0.0242, 0.0439],
        ('0.9', '0.3-1'): [0.0044, 0.0157, 0.0405],
    }

    _TABLE_2 = {
        ('k=1',): [0.2024, 0.1575, 0.1153, 0.2024, 0.1575, 0.1153, 0.2024, 0.1575, 0.1153],
        ('k=2',): [0.0634, 0.0697, 0.0508, 0.0769, 0.0811, 0.0573, 0.1401, 0.1249, 0.0855],
        ('k=5',): [0.0010, 0.0026, 0.0105, 0.0052, 0.0104, 0.0197, 0.0836, 0.0866, 0.0620],
        ('k=10',): [0.0000, 0.0000, 0.0014, 0.0000, 0.0001, 0.0072, 0.0486, 0.0582, 0.0492],
        ('k=20',): [0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0016, 0.0163, 0.0263, 0.0369],
        ('k=30',): [0.0000, 0.0000, 0.0000, 0.0000, 0.0000, 0.0003, 0.0024, 0.0061, 0.0274],
        ('0-0.15',): [0.0740, 0.0742, 0.0682, 0.0890, 0.0923, 0.0843, 0.2360, 0.2218, 0.1553],
        ('0.15-0.3',): [0.0000, 0.0000, 0.0042, 0.0003, 0.0011, 0.0164, 0.1052, 0.1246, 0.1020],
        ('0.3-1',): [0.0000, 0.0000, 0.0001, 0.0000, 0.0000, 0.0022, 0.0199, 0.0314, 0.0596],
    }

    _TABLE_3 = {
        ('k=1',): [0.1153, 0.1153, 0.1153, 0.1153, 0.1153],
        ('k=2',): [0.0855, 0.0761, 0.0564, 0.0514, 0.0508],
        ('k=5',): [0.0620, 0.0482, 0.0175, 0.0111, 0.0105],
        ('k=10',): [0.0492, 0.0348, 0.0053, 0.0017, 0.0014],
        ('k=20',): [0.0369, 0.0230, 0.0008, 0.0001, 0.0000],
        ('k=30',): [0.0274, 0.0137, 0.0001, 0.0000, 0.0000],
        ('0-0.15',): [0.1553, 0.1323, 0.0810, 0.0696, 0.0682],
        ('0.15-0.3',): [0.1020, 0.0727, 0.0127, 0.0048, 0.0042],
        ('0.3-1',): [0.0596, 0.0328, 0.0012, 0.0002, 0.0001],
    }

    _TABLE_4 = {
        ('0.0', '0-0.15'): [0.0740, 0.0740, 0.0890, 0.0889, 0.2360, 0.2347],
        ('0.0', '0.15-0.3'): [0.0000, 0.0000, 0.0003, 0.0003, 0.1052, 0.1027],
        ('0.0', '0.3-1'): [0.0000, 0.0000, 0.0000, 0.0000, 0.0199, 0.0188],
        ('0.5', '0-0.15'): [0.0682, 0.0680, 0.0843, 0.0841, 0.1553, 0.1521],
        ('0.5', '0.15-0.3'): [0.0042, 0.0040, 0.0164, 0.0160, 0.1020, 0.0968],
        ('0.5', '0.3-1'): [0.0001, 0.0001, 0.0022, 0.0020, 0.0596, 0.0500],
        ('0.9', '0-0.15'): [0.0326, 0.0326, 0.0373, 0.0364, 0.0488, 0.0421],
        ('0.9', '0.15-0.3'): [0.0147, 0.0144, 0.0242, 0.0232, 0.0439, 0.0355],
        ('0.9', '0.3-1'): [0.0044, 0.0040, 0.0157, 0.0137, 0.0405, 0.0291],
    }

    @classmethod
    def table_ids(cls) -> List[int]:
        return sorted(cls.TITLES)

    @classmethod
    def contagion_label(cls, c: float) -> str:
        return f"c={c:.1f}"

    @classmethod
    def decay_label(cls, d: float) -> str:
        return 'd=inf' if math.isinf(d) else f"d={d:g}"

    @classmethod
    def row_headers(cls, table_id: int) -> Tuple[str, ...]:
        return ('rho', 'tranche') if table_id in (1, 4) else ('contract',)

    @classmethod
    def columns(cls, table_id: int) -> List[str]:
        """Column labels in published order"""
        if table_id == 1:
            return [cls.contagion_label(c) for c in cls.CONTAGION_LEVELS]
        if table_id == 2:
            return [f"{cls.contagion_label(c)} {tag}" for c in cls.CONTAGION_LEVELS for tag in cls.COPULA_TAGS]
        if table_id == 3:
            return [cls.decay_label(d) for d in cls.DECAY_RATES]
        if table_id == 4:
            return [f"{cls.contagion_label(c)} {tag}" for c in cls.CONTAGION_LEVELS for tag in cls.COUNTERPARTY_TAGS]
        raise KeyError(f"Unknown table id: {table_id}")

    @classmethod
    def loading_label(cls, rho: float) -> str:
        return f"{rho:.1f}"

    @classmethod
    def rows(cls, table_id: int) -> List[Row]:
        return list(cls._published(table_id))

    @classmethod
    def _published(cls, table_id: int) -> Dict[Row, List[float]]:
        tables = {1: cls._TABLE_1, 2: cls._TABLE_2, 3: cls._TABLE_3, 4: cls._TABLE_4}
        if table_id not in tables:
            raise KeyError(f"Unknown table id: {table_id}")
        return tables[table_id]

    @classmethod
    def published(cls, table_id: int, row: Row, column: str) -> Optional[float]:
        """Published rate for a cell, or None if the cell is not part of the table"""
        values = cls._published(table_id).get(tuple(row))
        columns = cls.columns(table_id)
        if values is None or column not in columns:
            return None
        return values[columns.index(column)]
