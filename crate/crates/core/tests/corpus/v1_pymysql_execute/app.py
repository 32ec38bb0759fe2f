import pymysql

conn = pymysql.connect(host="47.106.1.9", user="report", password="q8Zr!t2Lw", database="hr")
cur = conn.cursor()
cur.execute("SELECT first_name, salary FROM employees WHERE dept_id = %s", (3,))
