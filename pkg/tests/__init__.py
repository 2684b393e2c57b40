# package marker so test modules can import tests.base
